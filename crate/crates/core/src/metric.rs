//! The distance `μ(p1, p2) = ‖φ_{p1→p2}‖` induced on proprioception by the
//! catalogue of learned displacements.
//!
//! Not every pair of sample points is linked by a catalogued `φ`. Such entries
//! stay undefined in the mask and get zero weight downstream.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::persist::{self, fmt17};
use crate::phi::PhiCatalogue;
use crate::{Error, Result};

pub const DEFAULT_METRIC_STEP: f64 = 0.01;
pub const DEFAULT_TRI_SLACK: f64 = 0.02;
/// Floating-point headroom on the triangle comparison, so exact metrics pass
/// at zero slack.
pub const ROUNDING_ALLOWANCE: f64 = 1e-12;

/// Symmetric matrix of `μ` over a regular proprioception sample, with a mask of
/// which entries are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub sample: Vec<f64>,
    values: Vec<f64>,
    mask: Vec<bool>,
}

/// Regular sample `0, step, 2·step, …, 1`.
pub fn sample_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Config(format!("metric step {step} must be in (0, 1]")));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64 * step) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("metric step {step} does not divide [0, 1]")));
    }
    Ok((0..=n).map(|i| if i == n { 1.0 } else { i as f64 * step }).collect())
}

impl DistanceMatrix {
    /// An all-undefined matrix (diagonal excepted) over `sample`.
    pub fn undefined(sample: Vec<f64>) -> Self {
        let n = sample.len();
        let mut mask = vec![false; n * n];
        for i in 0..n {
            mask[i * n + i] = true;
        }
        DistanceMatrix {
            sample,
            values: vec![0.0; n * n],
            mask,
        }
    }

    /// Builds a fully defined matrix from a dissimilarity function.
    pub fn from_fn(sample: Vec<f64>, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DistanceMatrix::undefined(sample);
        let n = m.len();
        for i in 0..n {
            for j in (i + 1)..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    /// `μ(i, j)` if defined.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.len() + j;
        self.mask[k].then_some(self.values[k])
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn is_defined(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.len() + j]
    }

    /// Sets both `(i, j)` and `(j, i)`. Diagonal writes are ignored.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            return;
        }
        let n = self.len();
        for k in [i * n + j, j * n + i] {
            self.values[k] = v;
            self.mask[k] = true;
        }
    }

    pub fn clear(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let n = self.len();
        for k in [i * n + j, j * n + i] {
            self.values[k] = 0.0;
            self.mask[k] = false;
        }
    }

    /// Fraction of off-diagonal entries that are defined.
    pub fn defined_fraction(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 1.0;
        }
        let defined = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.is_defined(i, j))
            .count();
        defined as f64 / (n * (n - 1)) as f64
    }

    /// Writes `values.csv`, `mask.csv` and `header.json` into `dir`.
    pub fn write_dir(&self, dir: &Path, header: &MatrixHeader) -> Result<()> {
        let n = self.len();
        let mut values = String::new();
        let mut mask = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| fmt17(self.value(i, j))).collect();
            values.push_str(&row.join(","));
            values.push('\n');
            let row: Vec<&str> = (0..n)
                .map(|j| if self.is_defined(i, j) { "1" } else { "0" })
                .collect();
            mask.push_str(&row.join(","));
            mask.push('\n');
        }
        persist::write_file(&dir.join("values.csv"), &values)?;
        persist::write_file(&dir.join("mask.csv"), &mask)?;
        persist::write_json(&dir.join("header.json"), header)
    }

    pub fn read_dir(dir: &Path) -> Result<(Self, MatrixHeader)> {
        let header: MatrixHeader = persist::read_json(&dir.join("header.json"))?;
        let n = header.sample.len();
        let values = read_square(&dir.join("values.csv"), n)?;
        let mask_raw = read_square(&dir.join("mask.csv"), n)?;
        let mask: Vec<bool> = mask_raw.iter().map(|&v| v != 0.0).collect();
        let m = DistanceMatrix {
            sample: header.sample.clone(),
            values,
            mask,
        };
        m.validate().map_err(|e| Error::Artifact {
            path: dir.to_path_buf(),
            msg: e.to_string(),
        })?;
        Ok((m, header))
    }

    /// Checks the structural invariants: zero defined diagonal and symmetry of
    /// both values and mask.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if !self.is_defined(i, i) || self.value(i, i) != 0.0 {
                return Err(Error::Contract(format!("diagonal entry {i} not a defined zero")));
            }
            for j in (i + 1)..n {
                if self.is_defined(i, j) != self.is_defined(j, i)
                    || self.value(i, j).to_bits() != self.value(j, i).to_bits()
                {
                    return Err(Error::Contract(format!("entry ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(())
    }
}

fn read_square(path: &Path, n: usize) -> Result<Vec<f64>> {
    let text = persist::read_file(path)?;
    let bad = |msg: String| Error::Artifact {
        path: path.to_path_buf(),
        msg,
    };
    let mut out = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (i, line) in text.lines().filter(|l| !l.is_empty()).enumerate() {
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        if row.len() != n {
            return Err(bad(format!("row {} has {} columns, expected {n}", i + 1, row.len())));
        }
        out.extend(row);
        rows += 1;
    }
    if rows != n {
        return Err(bad(format!("{rows} rows, expected {n}")));
    }
    Ok(out)
}

/// JSON header stored alongside the matrix CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub sample: Vec<f64>,
    pub step: f64,
    pub seed: Option<u64>,
}

/// Fills the `μ` matrix from the catalogue.
///
/// An entry is the norm of the `φ` carrying `p_i` to `p_j`, falling back to the
/// one carrying `p_j` to `p_i`. If neither exists it stays undefined.
pub fn build_distance_matrix(cat: &PhiCatalogue, step: f64) -> Result<DistanceMatrix> {
    if cat.is_empty() {
        return Err(Error::Contract("cannot build a metric from an empty catalogue".into()));
    }
    let sample = sample_grid(step)?;
    let n = sample.len();
    let entries: Vec<(usize, usize, Option<f64>)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let sample = &sample;
            ((i + 1)..n).map(move |j| {
                let (a, b) = (sample[i], sample[j]);
                let mu = cat
                    .lookup(a, b)
                    .or_else(|| cat.lookup(b, a))
                    .map(|phi| phi.norm());
                (i, j, mu)
            })
        })
        .collect();
    let mut m = DistanceMatrix::undefined(sample);
    for (i, j, mu) in entries {
        if let Some(v) = mu {
            m.set(i, j, v);
        }
    }
    Ok(m)
}

/// Outcome of [`check_metric_axioms`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// Defined off-diagonal entries with `μ < 1e-9`.
    pub identity_violations: usize,
    pub symmetry_violations: usize,
    pub negative_entries: usize,
    pub diagonal_exact: bool,
    pub triangle_violations: usize,
    pub defined_triples: usize,
    pub worst_triangle_excess: f64,
    pub tri_slack: f64,
}

impl AxiomReport {
    pub fn triangle_violation_rate(&self) -> f64 {
        if self.defined_triples == 0 {
            0.0
        } else {
            self.triangle_violations as f64 / self.defined_triples as f64
        }
    }
}

/// Counts violations of the metric axioms among defined entries.
///
/// Triples are ordered `(i, j, k)` with distinct indices and all three entries
/// defined. A violation is `μ(i,k) > μ(i,j) + μ(j,k) + tri_slack`, up to
/// [`ROUNDING_ALLOWANCE`].
pub fn check_metric_axioms(m: &DistanceMatrix, tri_slack: f64) -> AxiomReport {
    let n = m.len();
    let mut identity_violations = 0;
    let mut symmetry_violations = 0;
    let mut negative_entries = 0;
    let mut diagonal_exact = true;
    for i in 0..n {
        if m.get(i, i) != Some(0.0) {
            diagonal_exact = false;
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            if let Some(v) = m.get(i, j) {
                if v < 1e-9 {
                    identity_violations += 1;
                }
                if v < 0.0 {
                    negative_entries += 1;
                }
            }
            if j > i && m.get(i, j).map(f64::to_bits) != m.get(j, i).map(f64::to_bits) {
                symmetry_violations += 1;
            }
        }
    }

    let (triangle_violations, defined_triples, worst_triangle_excess) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = (0usize, 0usize, f64::NEG_INFINITY);
            for k in 0..n {
                if k == i {
                    continue;
                }
                let Some(ik) = m.get(i, k) else { continue };
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let (Some(ij), Some(jk)) = (m.get(i, j), m.get(j, k)) else {
                        continue;
                    };
                    acc.1 += 1;
                    let excess = ik - (ij + jk);
                    if excess > tri_slack + ROUNDING_ALLOWANCE {
                        acc.0 += 1;
                    }
                    acc.2 = acc.2.max(excess);
                }
            }
            acc
        })
        .reduce(
            || (0, 0, f64::NEG_INFINITY),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)),
        );

    AxiomReport {
        identity_violations,
        symmetry_violations,
        negative_entries,
        diagonal_exact,
        triangle_violations,
        defined_triples,
        worst_triangle_excess: if defined_triples == 0 {
            0.0
        } else {
            worst_triangle_excess
        },
        tri_slack,
    }
}
