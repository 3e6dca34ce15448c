//! One-dimensional metric MDS of a partially defined distance matrix.
//!
//! The optimizer is SMACOF (stress majorization). Undefined entries get weight
//! zero, defined ones weight one. Each Guttman transform
//!
//! ```text
//! X ← V⁺ B(X) X
//! ```
//!
//! never increases the raw stress, so the STRESS1 trace is non-increasing. `V`
//! is the weighted graph Laplacian. Its pseudo-inverse is applied through a
//! Cholesky factorization of `V + 11ᵀ/n`, which is exact on centred vectors
//! and valid whenever the weight graph is connected.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::metric::DistanceMatrix;
use crate::persist::{self, fmt17};
use crate::stats::pearson;
use crate::{Error, Result};

/// Kruskal's STRESS-1 over defined off-diagonal pairs:
/// `sqrt(Σ (μ_ij − |c_i − c_j|)² / Σ μ_ij²)`.
pub fn stress1(m: &DistanceMatrix, coords: &[f64]) -> Result<f64> {
    if coords.len() != m.len() {
        return Err(Error::Contract(format!(
            "{} coordinates for a {}-point matrix",
            coords.len(),
            m.len()
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m.len() {
        for j in (i + 1)..m.len() {
            if let Some(mu) = m.get(i, j) {
                let r = mu - (coords[i] - coords[j]).abs();
                num += r * r;
                den += mu * mu;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::Degenerate(
            "every defined dissimilarity is zero".into(),
        ));
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmacofOptions {
    pub max_iter: usize,
    /// Stop once an iteration lowers STRESS1 by less than this.
    pub tol: f64,
}

impl Default for SmacofOptions {
    fn default() -> Self {
        SmacofOptions {
            max_iter: 1000,
            tol: 1e-9,
        }
    }
}

/// Result of [`smacof_1d`], optionally normalized by [`normalize_embedding`].
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Vec<f64>,
    /// STRESS1 of the initial configuration followed by one value per iteration.
    pub stress_trace: Vec<f64>,
    pub normalized: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Summary written next to the embedding CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSummary {
    pub stress_final: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Embedding {
    pub fn final_stress(&self) -> f64 {
        *self.stress_trace.last().expect("trace holds the initial stress")
    }

    pub fn summary(&self) -> EmbeddingSummary {
        EmbeddingSummary {
            stress_final: self.final_stress(),
            iterations: self.iterations,
            converged: self.converged,
        }
    }

    /// Writes `embedding.csv` (`p,P_normalized`) and `embedding.json`.
    pub fn write_dir(&self, dir: &Path, sample: &[f64]) -> Result<()> {
        let normalized = self
            .normalized
            .as_ref()
            .ok_or_else(|| Error::Contract("embedding must be normalized before writing".into()))?;
        let mut csv = String::from("p,P_normalized\n");
        for (p, q) in sample.iter().zip(normalized) {
            csv.push_str(&format!("{},{}\n", fmt17(*p), fmt17(*q)));
        }
        persist::write_file(&dir.join("embedding.csv"), &csv)?;
        persist::write_json(&dir.join("embedding.json"), &self.summary())
    }

    /// Reads back `(sample, normalized P, summary)`.
    pub fn read_dir(dir: &Path) -> Result<(Vec<f64>, Vec<f64>, EmbeddingSummary)> {
        let rows = persist::read_csv(&dir.join("embedding.csv"), &["p", "P_normalized"])?;
        let summary = persist::read_json(&dir.join("embedding.json"))?;
        let (p, q) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
        Ok((p, q, summary))
    }
}

fn weight_graph_connected(m: &DistanceMatrix) -> bool {
    let n = m.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && j != i && m.is_defined(i, j) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Classical (Torgerson) MDS in one dimension, used as the starting point.
///
/// Undefined entries are filled with the raw proprioceptive distance
/// `|p_i − p_j|` before double-centering. The sign is fixed so that the result
/// correlates positively with the sample.
pub fn classical_init(m: &DistanceMatrix) -> Result<Vec<f64>> {
    let n = m.len();
    if n < 2 {
        return Err(Error::Degenerate("need at least two points".into()));
    }
    let d2 = DMatrix::from_fn(n, n, |i, j| {
        let d = m
            .get(i, j)
            .unwrap_or_else(|| (m.sample[i] - m.sample[j]).abs());
        d * d
    });
    let row_means: Vec<f64> = (0..n).map(|i| d2.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("n >= 2");
    if !(lambda > 0.0) {
        return Err(Error::Degenerate(
            "double-centred matrix has no positive eigenvalue".into(),
        ));
    }
    let scale = lambda.sqrt();
    let mut coords: Vec<f64> = eig.eigenvectors.column(k).iter().map(|v| v * scale).collect();
    if pearson(&coords, &m.sample).is_some_and(|r| r < 0.0) {
        coords.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(coords)
}

/// Weighted SMACOF in one dimension.
pub fn smacof_1d(m: &DistanceMatrix, init: &[f64], opts: SmacofOptions) -> Result<Embedding> {
    let n = m.len();
    if init.len() != n {
        return Err(Error::Contract(format!(
            "initial configuration has {} points, matrix has {n}",
            init.len()
        )));
    }
    let any_defined = (0..n).any(|i| ((i + 1)..n).any(|j| m.is_defined(i, j)));
    if !any_defined {
        return Err(Error::Embedding("no defined off-diagonal dissimilarity".into()));
    }
    if !weight_graph_connected(m) {
        return Err(Error::Embedding(
            "weight graph is disconnected; components cannot be placed relative to each other"
                .into(),
        ));
    }

    // V + 11ᵀ/n
    let inv_n = 1.0 / n as f64;
    let mut v = DMatrix::from_element(n, n, inv_n);
    for i in 0..n {
        for j in 0..n {
            if i != j && m.is_defined(i, j) {
                v[(i, j)] -= 1.0;
                v[(i, i)] += 1.0;
            }
        }
    }
    let chol = v
        .cholesky()
        .ok_or_else(|| Error::Embedding("Laplacian factorization failed".into()))?;

    let mut x = init.to_vec();
    let mut stress = stress1(m, &x)?;
    let mut trace = vec![stress];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let bx = DVector::from_fn(n, |i, _| {
            let mut acc = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                if let Some(mu) = m.get(i, j) {
                    let d = (x[i] - x[j]).abs();
                    if d > 0.0 {
                        acc += mu * (x[i] - x[j]) / d;
                    }
                }
            }
            acc
        });
        let next = chol.solve(&bx);
        x = next.iter().copied().collect();
        let s = stress1(m, &x)?;
        trace.push(s);
        let decrease = stress - s;
        stress = s;
        if decrease < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(Embedding {
        coords: x,
        stress_trace: trace,
        normalized: None,
        iterations,
        converged,
    })
}

/// Maps coordinates affinely onto `[0, 1]`, reflecting first if they
/// anti-correlate with `reference_p`.
pub fn normalize_embedding(e: &Embedding, reference_p: &[f64]) -> Result<Embedding> {
    let lo = e.coords.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Degenerate("constant embedding cannot be normalized".into()));
    }
    let flip = pearson(&e.coords, reference_p).is_some_and(|r| r < 0.0);
    let normalized = e
        .coords
        .iter()
        .map(|&c| {
            if flip {
                (hi - c) / (hi - lo)
            } else {
                (c - lo) / (hi - lo)
            }
        })
        .collect();
    Ok(Embedding {
        normalized: Some(normalized),
        ..e.clone()
    })
}
