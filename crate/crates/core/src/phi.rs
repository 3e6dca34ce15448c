//! Sensible rigid displacements.
//!
//! After the environment moves, the agent rescans and looks for coincidences:
//! proprioceptive values `p` (old scan) and `p'` (new scan) at which both
//! receptors report the same excitation. The set of such pairs is a partial
//! function `φ` with `p' = φ(p)`. Because a rigid 1D displacement preserves
//! order, a valid `φ` is strictly increasing, and any match that breaks
//! monotonicity is an aliasing artifact and is dropped.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{BodyModel, Scan};
use crate::persist::{self, fmt17};
use crate::world::{self, Environment};
use crate::{Error, Result};

pub const DEFAULT_CHANGE_THRESHOLD: f64 = 0.05;
pub const DEFAULT_MATCH_TOL_REL: f64 = 0.002;
pub const DEFAULT_PAIR_LOOKUP_EPS: f64 = 0.005;

/// One coincidence: proprioception `p` before and `p_prime` after a displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPair {
    pub p: f64,
    pub p_prime: f64,
}

/// Sidecar metadata stored next to each `φ` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiMeta {
    pub episode_id: u64,
    pub norm: f64,
    pub true_d: Option<f64>,
}

/// A learned displacement function.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFunction {
    pairs: Vec<PhiPair>,
    norm: f64,
    pub episode_id: u64,
    /// Physical displacement that produced this episode. Evaluation only.
    pub true_d: Option<f64>,
}

/// `max |p - p'|` over the pairs: the sup-distance of `φ` from the identity.
pub fn phi_norm(pairs: &[PhiPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Contract("norm of an empty φ".into()));
    }
    Ok(pairs
        .iter()
        .map(|pr| (pr.p - pr.p_prime).abs())
        .fold(0.0, f64::max))
}

impl PhiFunction {
    pub fn new(pairs: Vec<PhiPair>, episode_id: u64, true_d: Option<f64>) -> Result<Self> {
        let norm = phi_norm(&pairs)?;
        if let Some(w) = pairs.windows(2).find(|w| !(w[1].p > w[0].p)) {
            return Err(Error::Contract(format!(
                "φ pairs must be strictly increasing in p ({} then {})",
                w[0].p, w[1].p
            )));
        }
        if let Some(pr) = pairs
            .iter()
            .find(|pr| !(0.0..=1.0).contains(&pr.p) || !(0.0..=1.0).contains(&pr.p_prime))
        {
            return Err(Error::Contract(format!(
                "φ pair ({}, {}) outside [0, 1]",
                pr.p, pr.p_prime
            )));
        }
        Ok(PhiFunction {
            pairs,
            norm,
            episode_id,
            true_d,
        })
    }

    pub fn pairs(&self) -> &[PhiPair] {
        &self.pairs
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Lowest and highest `p` at which `φ` is defined.
    pub fn domain(&self) -> (f64, f64) {
        (self.pairs[0].p, self.pairs[self.pairs.len() - 1].p)
    }

    /// Distance from `p` to the nearest stored pair's `p`.
    pub fn distance_to_support(&self, p: f64) -> f64 {
        let i = self.pairs.partition_point(|pr| pr.p < p);
        let mut best = f64::INFINITY;
        if i < self.pairs.len() {
            best = best.min((self.pairs[i].p - p).abs());
        }
        if i > 0 {
            best = best.min((p - self.pairs[i - 1].p).abs());
        }
        best
    }

    /// Evaluates `φ(p)` by linear interpolation between the bracketing pairs,
    /// clamping to the end pairs outside the domain.
    pub fn eval(&self, p: f64) -> f64 {
        let i = self.pairs.partition_point(|pr| pr.p < p);
        if i == 0 {
            return self.pairs[0].p_prime;
        }
        if i == self.pairs.len() {
            return self.pairs[i - 1].p_prime;
        }
        let (a, b) = (self.pairs[i - 1], self.pairs[i]);
        let t = (p - a.p) / (b.p - a.p);
        a.p_prime + t * (b.p_prime - a.p_prime)
    }

    pub fn meta(&self) -> PhiMeta {
        PhiMeta {
            episode_id: self.episode_id,
            norm: self.norm,
            true_d: self.true_d,
        }
    }

    /// CSV with header `p,p_prime`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,p_prime\n");
        for pr in &self.pairs {
            out.push_str(&fmt17(pr.p));
            out.push(',');
            out.push_str(&fmt17(pr.p_prime));
            out.push('\n');
        }
        out
    }

    /// Writes `<stem>.csv` and the `<stem>.json` sidecar.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        persist::write_file(&dir.join(format!("{stem}.csv")), &self.to_csv())?;
        persist::write_json(&dir.join(format!("{stem}.json")), &self.meta())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let rows = persist::read_csv(&csv_path, &["p", "p_prime"])?;
        let meta: PhiMeta = persist::read_json(&dir.join(format!("{stem}.json")))?;
        let pairs = rows
            .into_iter()
            .map(|r| PhiPair {
                p: r[0],
                p_prime: r[1],
            })
            .collect();
        let phi = PhiFunction::new(pairs, meta.episode_id, meta.true_d).map_err(|e| {
            Error::Artifact {
                path: csv_path.clone(),
                msg: e.to_string(),
            }
        })?;
        if phi.norm.to_bits() != meta.norm.to_bits() {
            return Err(Error::Artifact {
                path: csv_path,
                msg: format!("sidecar norm {} disagrees with pairs ({})", meta.norm, phi.norm),
            });
        }
        Ok(phi)
    }
}

/// Whether the scans differ by more than `threshold` at any grid point on any
/// receptor. The comparison is strict.
pub fn detect_change(old: &Scan, new: &Scan, threshold: f64) -> Result<bool> {
    check_grids(old, new)?;
    Ok(max_deviation(old, new) > threshold)
}

/// Largest per-receptor absolute difference between two scans on one grid.
pub fn max_deviation(old: &Scan, new: &Scan) -> f64 {
    old.entries
        .iter()
        .zip(&new.entries)
        .flat_map(|(a, b)| a.s.iter().zip(&b.s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn check_grids(old: &Scan, new: &Scan) -> Result<()> {
    if old.same_grid(new) {
        Ok(())
    } else {
        Err(Error::Contract("scans were taken on different grids".into()))
    }
}

#[inline]
fn sensor_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let (d0, d1) = (a[0] - b[0], a[1] - b[1]);
    (d0 * d0 + d1 * d1).sqrt()
}

/// Extracts `φ` from two scans of a displaced environment.
///
/// Every old entry is matched to its nearest new entry in sensor space. A match
/// is accepted when that distance is at most `tol_rel · M`, with `M` the largest
/// excitation over both scans. The accepted pairs are then reduced to their
/// longest run that is strictly increasing in `p'`.
///
/// Callers normally run [`detect_change`] first. This function does not check it.
pub fn match_coincidences(
    old: &Scan,
    new: &Scan,
    episode_id: u64,
    tol_rel: f64,
) -> Result<PhiFunction> {
    check_grids(old, new)?;
    let m = old.max_excitation().max(new.max_excitation());
    let tol = tol_rel * m;

    let accepted: Vec<PhiPair> = old
        .entries
        .par_iter()
        .map(|e| {
            let mut best = (f64::INFINITY, 0usize);
            for (j, f) in new.entries.iter().enumerate() {
                let d = sensor_dist(&e.s, &f.s);
                if d < best.0 {
                    best = (d, j);
                }
            }
            (best.0 <= tol).then(|| PhiPair {
                p: e.p,
                p_prime: new.entries[best.1].p,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    if accepted.len() < 2 {
        return Err(Error::Extraction(format!(
            "episode {episode_id}: {} coincidence(s) within tolerance {tol:.3e}",
            accepted.len()
        )));
    }
    let primes: Vec<f64> = accepted.iter().map(|pr| pr.p_prime).collect();
    let keep = longest_increasing_subsequence(&primes);
    if keep.len() < 2 {
        return Err(Error::Extraction(format!(
            "episode {episode_id}: no monotone run among {} coincidences",
            accepted.len()
        )));
    }
    let pairs = keep.into_iter().map(|i| accepted[i]).collect();
    PhiFunction::new(pairs, episode_id, None)
}

/// Indices of a longest strictly increasing subsequence of `values`.
///
/// Patience sorting, `O(n log n)`. Among equally long answers the one ending at
/// the earliest-updated tail is returned, which is deterministic.
pub fn longest_increasing_subsequence(values: &[f64]) -> Vec<usize> {
    let mut tails: Vec<usize> = Vec::new();
    let mut prev = vec![usize::MAX; values.len()];
    for (i, &v) in values.iter().enumerate() {
        let k = tails.partition_point(|&t| values[t] < v);
        if k > 0 {
            prev[i] = tails[k - 1];
        }
        if k == tails.len() {
            tails.push(i);
        } else {
            tails[k] = i;
        }
    }
    let mut out = Vec::with_capacity(tails.len());
    let mut cur = tails.last().copied().unwrap_or(usize::MAX);
    while cur != usize::MAX {
        out.push(cur);
        cur = prev[cur];
    }
    out.reverse();
    out
}

/// The agent's record of every displacement it has learned.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiCatalogue {
    pub items: Vec<PhiFunction>,
    pub match_tol_rel: f64,
    pub pair_lookup_eps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogueManifest {
    match_tol_rel: f64,
    pair_lookup_eps: f64,
    entries: Vec<String>,
}

impl Default for PhiCatalogue {
    fn default() -> Self {
        PhiCatalogue {
            items: Vec::new(),
            match_tol_rel: DEFAULT_MATCH_TOL_REL,
            pair_lookup_eps: DEFAULT_PAIR_LOOKUP_EPS,
        }
    }
}

impl PhiCatalogue {
    pub fn new(match_tol_rel: f64, pair_lookup_eps: f64) -> Result<Self> {
        if !(match_tol_rel > 0.0) || !(pair_lookup_eps > 0.0) {
            return Err(Error::Config(
                "catalogue tolerances must be positive".into(),
            ));
        }
        Ok(PhiCatalogue {
            items: Vec::new(),
            match_tol_rel,
            pair_lookup_eps,
        })
    }

    pub fn push(&mut self, phi: PhiFunction) {
        self.items.push(phi);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Writes `manifest.json` plus one `phi_NNNN.{csv,json}` pair per item.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let entries: Vec<String> = self
            .items
            .iter()
            .map(|phi| format!("phi_{:04}", phi.episode_id))
            .collect();
        for (phi, stem) in self.items.iter().zip(&entries) {
            phi.write(dir, stem)?;
        }
        persist::write_json(
            &dir.join("manifest.json"),
            &CatalogueManifest {
                match_tol_rel: self.match_tol_rel,
                pair_lookup_eps: self.pair_lookup_eps,
                entries,
            },
        )
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let manifest: CatalogueManifest = persist::read_json(&dir.join("manifest.json"))?;
        let mut cat = PhiCatalogue::new(manifest.match_tol_rel, manifest.pair_lookup_eps)?;
        for stem in &manifest.entries {
            cat.push(PhiFunction::read(dir, stem)?);
        }
        Ok(cat)
    }

    /// Finds the catalogued `φ` that carries `p1` to `p2`.
    ///
    /// Candidates are the functions with a stored pair within `pair_lookup_eps`
    /// of `p1`. Each is evaluated at `p1`, and the one landing closest to `p2`
    /// wins if it lands within `pair_lookup_eps`. Ties go to the smaller norm,
    /// then the earlier episode.
    pub fn lookup(&self, p1: f64, p2: f64) -> Option<&PhiFunction> {
        let eps = self.pair_lookup_eps;
        self.items
            .iter()
            .filter(|phi| phi.distance_to_support(p1) <= eps)
            .map(|phi| ((phi.eval(p1) - p2).abs(), phi))
            .filter(|(r, _)| *r <= eps)
            .min_by(|(ra, a), (rb, b)| {
                ra.total_cmp(rb)
                    .then(a.norm.total_cmp(&b.norm))
                    .then(a.episode_id.cmp(&b.episode_id))
            })
            .map(|(_, phi)| phi)
    }
}

/// Free-function form of [`PhiCatalogue::lookup`].
pub fn lookup_phi(cat: &PhiCatalogue, p1: f64, p2: f64) -> Option<&PhiFunction> {
    cat.lookup(p1, p2)
}

/// A pair of relative positions whose sensor readings alias each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aliasing {
    pub u_a: f64,
    pub u_b: f64,
    pub sensor_distance: f64,
}

/// Spacing of the relative-position grid used by [`find_aliasing`].
pub const RICHNESS_STEP: f64 = 0.002;
/// Minimum physical separation for two readings to count as aliased.
pub const RICHNESS_MIN_SEPARATION: f64 = 0.05;

/// Searches for two mid-point positions, further apart than
/// [`RICHNESS_MIN_SEPARATION`], whose receptor readings lie within the matching
/// tolerance.
///
/// Positions are taken relative to the environment and cover every placement
/// reachable with `|offset| <= reach`, i.e. `[-reach, 1 + reach]`.
pub fn find_aliasing(
    env: &Environment,
    body: &BodyModel,
    tol_rel: f64,
    reach: f64,
) -> Option<Aliasing> {
    let lo = -reach;
    let n = ((1.0 + 2.0 * reach) / RICHNESS_STEP).ceil() as usize + 1;
    let us: Vec<f64> = (0..n).map(|i| lo + i as f64 * RICHNESS_STEP).collect();
    let base = Environment {
        sources: env.sources.clone(),
        offset: 0.0,
    };
    let readings: Vec<[f64; 2]> = us
        .iter()
        .map(|&u| body.receptor_positions(u).map(|r| base.luminance(r)))
        .collect();
    let m = readings.iter().flatten().copied().fold(0.0, f64::max);
    let tol = tol_rel * m;
    let skip = (RICHNESS_MIN_SEPARATION / RICHNESS_STEP).floor() as usize + 1;
    (0..n).find_map(|a| {
        ((a + skip)..n).find_map(|b| {
            let d = sensor_dist(&readings[a], &readings[b]);
            (d <= tol && us[b] - us[a] > RICHNESS_MIN_SEPARATION).then_some(Aliasing {
                u_a: us[a],
                u_b: us[b],
                sensor_distance: d,
            })
        })
    })
}

/// Upper bound on environment draws in [`generate_rich_environment`].
pub const MAX_RICHNESS_ATTEMPTS: u64 = 10_000;

/// Draws environments on successive RNG streams of `seed` until one passes
/// [`find_aliasing`]. Returns the environment and the stream that produced it.
pub fn generate_rich_environment(
    seed: u64,
    n_sources: usize,
    range: (f64, f64),
    body: &BodyModel,
    tol_rel: f64,
    reach: f64,
) -> Result<(Environment, u64)> {
    for stream in 0..MAX_RICHNESS_ATTEMPTS {
        let env = world::generate_on_stream(seed, stream, n_sources, range.0, range.1)?;
        match find_aliasing(&env, body, tol_rel, reach) {
            None => return Ok((env, stream)),
            Some(a) => log::debug!(
                "seed {seed} stream {stream}: readings at {:.3} and {:.3} alias ({:.2e})",
                a.u_a,
                a.u_b,
                a.sensor_distance
            ),
        }
    }
    Err(Error::Config(format!(
        "no sufficiently rich environment in {MAX_RICHNESS_ATTEMPTS} draws for seed {seed}"
    )))
}

/// Path of the CSV written for `episode_id` inside a catalogue directory.
pub fn entry_path(dir: &Path, episode_id: u64) -> PathBuf {
    dir.join(format!("phi_{episode_id:04}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{scan, ScanEntry};

    fn pairs(v: &[(f64, f64)]) -> Vec<PhiPair> {
        v.iter().map(|&(p, p_prime)| PhiPair { p, p_prime }).collect()
    }

    fn toy_scan(rows: &[(f64, f64, f64)]) -> Scan {
        Scan {
            entries: rows
                .iter()
                .map(|&(p, a, b)| ScanEntry { p, s: [a, b] })
                .collect(),
            environment_tag: "toy".into(),
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(phi_norm(&pairs(&[(0.1, 0.1), (0.5, 0.5)])).unwrap(), 0.0);
        let n = phi_norm(&pairs(&[(0.1, 0.3), (0.2, 0.35)])).unwrap();
        assert!((n - 0.2).abs() < 1e-15);
        assert!(matches!(phi_norm(&[]), Err(Error::Contract(_))));
    }

    #[test]
    fn constructor_rejects_bad_pairs() {
        assert!(PhiFunction::new(pairs(&[(0.2, 0.3), (0.1, 0.4)]), 0, None).is_err());
        assert!(PhiFunction::new(pairs(&[(0.2, 0.3), (0.2, 0.4)]), 0, None).is_err());
        assert!(PhiFunction::new(pairs(&[(0.2, 1.3)]), 0, None).is_err());
        assert!(PhiFunction::new(vec![], 0, None).is_err());
    }

    #[test]
    fn change_detection_is_strict() {
        let a = toy_scan(&[(0.0, 0.5, 0.5), (1.0, 0.25, 0.25)]);
        let b = toy_scan(&[(0.0, 0.5, 0.5), (1.0, 0.25, 0.3125)]);
        // exactly representable deviation of 0.0625
        assert!(!detect_change(&a, &b, 0.0625).unwrap());
        assert!(detect_change(&a, &b, 0.0624).unwrap());
        assert!(!detect_change(&a, &a, DEFAULT_CHANGE_THRESHOLD).unwrap());
        let c = toy_scan(&[(0.0, 0.5, 0.5)]);
        assert!(matches!(detect_change(&a, &c, 0.05), Err(Error::Contract(_))));
    }

    #[test]
    fn identical_scans_give_identity() {
        let env = Environment::new([0.1, 0.45, 0.8, -0.3, 1.4]);
        let s = scan(&env, &BodyModel::default()).unwrap();
        let phi = match_coincidences(&s, &s, 3, DEFAULT_MATCH_TOL_REL).unwrap();
        assert_eq!(phi.norm(), 0.0);
        assert!(phi.pairs().iter().all(|pr| pr.p == pr.p_prime));
        assert_eq!(phi.episode_id, 3);
    }

    #[test]
    fn dark_scans_fail_extraction() {
        let s = scan(&Environment::empty(), &BodyModel::default()).unwrap();
        assert!(matches!(
            match_coincidences(&s, &s, 0, DEFAULT_MATCH_TOL_REL),
            Err(Error::Extraction(_))
        ));
    }

    #[test]
    fn lis_basic() {
        assert_eq!(longest_increasing_subsequence(&[]), Vec::<usize>::new());
        let v = [0.1, 0.5, 0.2, 0.3, 0.9, 0.4, 0.5];
        let idx = longest_increasing_subsequence(&v);
        assert_eq!(idx.len(), 5);
        assert!(idx.windows(2).all(|w| w[0] < w[1] && v[w[0]] < v[w[1]]));
        // equal values are not strictly increasing
        assert_eq!(longest_increasing_subsequence(&[1.0, 1.0, 1.0]).len(), 1);
    }

    #[test]
    fn eval_interpolates_and_clamps() {
        let phi = PhiFunction::new(pairs(&[(0.1, 0.2), (0.3, 0.6)]), 0, None).unwrap();
        assert!((phi.eval(0.2) - 0.4).abs() < 1e-15);
        assert_eq!(phi.eval(0.0), 0.2);
        assert_eq!(phi.eval(0.9), 0.6);
        assert!((phi.distance_to_support(0.12) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn lookup_rules() {
        let mut cat = PhiCatalogue::default();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let ident = pairs(&grid.iter().map(|&p| (p, p)).collect::<Vec<_>>());
        let shift = pairs(
            &grid
                .iter()
                .filter(|&&p| p <= 0.8)
                .map(|&p| (p, p + 0.2))
                .collect::<Vec<_>>(),
        );
        cat.push(PhiFunction::new(shift.clone(), 1, None).unwrap());
        cat.push(PhiFunction::new(ident, 2, None).unwrap());
        cat.push(PhiFunction::new(shift, 0, None).unwrap());

        let hit = cat.lookup(0.4, 0.4).unwrap();
        assert_eq!((hit.episode_id, hit.norm()), (2, 0.0));
        // two identical candidates: earlier episode wins
        assert_eq!(cat.lookup(0.3, 0.5).unwrap().episode_id, 0);
        assert!(cat.lookup(0.3, 0.55).is_none());
        // beyond the shift's support, and the identity lands too far away
        assert!(cat.lookup(0.95, 1.0).is_none());
        assert!(lookup_phi(&PhiCatalogue::default(), 0.1, 0.1).is_none());
    }

    #[test]
    fn catalogue_directory_round_trip() {
        let mut cat = PhiCatalogue::default();
        cat.push(PhiFunction::new(pairs(&[(0.1, 0.3), (0.2, 0.35)]), 4, Some(0.12)).unwrap());
        cat.push(PhiFunction::new(pairs(&[(0.5, 0.4), (0.6, 0.52)]), 7, None).unwrap());
        let dir = tempfile::tempdir().unwrap();
        cat.write_dir(dir.path()).unwrap();
        assert!(entry_path(dir.path(), 4).exists());
        let back = PhiCatalogue::read_dir(dir.path()).unwrap();
        assert_eq!(back, cat);
        let meta: serde_json::Value =
            persist::read_json(&dir.path().join("phi_0004.json")).unwrap();
        assert_eq!(meta["episode_id"], 4);
        assert_eq!(meta["true_d"], 0.12);
    }

    #[test]
    fn single_source_environment_aliases() {
        // far from the source both receptors read ~0 everywhere
        let env = Environment::new([0.5]);
        assert!(find_aliasing(&env, &BodyModel::default(), DEFAULT_MATCH_TOL_REL, 0.95).is_some());
    }

    #[test]
    fn rich_environment_is_deterministic() {
        let body = BodyModel::default();
        let a = generate_rich_environment(7, 5, (-4.0, 5.0), &body, 0.002, 0.95).unwrap();
        let b = generate_rich_environment(7, 5, (-4.0, 5.0), &body, 0.002, 0.95).unwrap();
        assert_eq!(a, b);
        assert!(find_aliasing(&a.0, &body, 0.002, 0.95).is_none());
    }
}
