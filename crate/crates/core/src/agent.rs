//! The agent's body: the hidden proprioception map, the two-receptor geometry
//! and the scanning procedure.
//!
//! The agent never sees `x`, the world position of the mid-point between its
//! receptors. It only sees `p = pmap(x)`, where
//!
//! ```text
//! pmap(x) = x + sin(4πx) / (4π)
//! ```
//!
//! is monotone on `[0, 1]` with vanishing derivative at `x = 0.25` and
//! `x = 0.75`. Around those points a large physical motion moves `p` only a
//! little, which is what interrupts the learned displacement functions.

use std::f64::consts::PI;
use std::path::Path;

use crate::persist::{self, fmt17};
use crate::world::Environment;
use crate::{Error, Result};

/// Receptors per agent.
pub const N_RECEPTORS: usize = 2;

/// Positions of the mid-point where `pmap` has zero slope.
pub const SINGULAR_POSITIONS: [f64; 2] = [0.25, 0.75];

const FREQ: f64 = 4.0 * PI;

/// Proprioception as a function of the receptors' mid-point position.
pub fn pmap(x: f64) -> Result<f64> {
    check_unit("x", x)?;
    Ok(pmap_raw(x))
}

/// Derivative of [`pmap`]; zero exactly at [`SINGULAR_POSITIONS`].
pub fn pmap_slope(x: f64) -> f64 {
    1.0 + (FREQ * x).cos()
}

#[inline]
fn pmap_raw(x: f64) -> f64 {
    x + (FREQ * x).sin() / FREQ
}

/// Inverts [`pmap`] by bisection.
///
/// Bisection runs until the bracket stops shrinking in floating point, which
/// leaves `|pmap(x) - p|` at rounding level and also resolves the flat stretches
/// around the singular positions.
pub fn pmap_inv(p: f64) -> Result<f64> {
    check_unit("p", p)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = pmap_raw(mid);
        if v == p {
            return Ok(mid);
        }
        if v < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the end of the final bracket that lands closer
    if (pmap_raw(lo) - p).abs() <= (pmap_raw(hi) - p).abs() {
        Ok(lo)
    } else {
        Ok(hi)
    }
}

/// Singular proprioception values, i.e. `pmap` of [`SINGULAR_POSITIONS`].
pub fn singular_proprioception() -> [f64; 2] {
    SINGULAR_POSITIONS.map(pmap_raw)
}

fn check_unit(what: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: v,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

/// Analytic displacement function for a rigid shift by `d` world units.
///
/// Sensory input seen at `x` before the environment moves by `d` reappears at
/// `x + d` afterwards, so the coincidence links `pmap(x)` to `pmap(x + d)`.
/// Returns `None` where `x + d` leaves `[0, 1]` or `p` is outside `[0, 1]`.
///
/// This is an evaluation oracle. The learning pipeline never calls it.
pub fn ground_truth_phi(d: f64, p: f64) -> Option<f64> {
    let x = pmap_inv(p).ok()? + d;
    (0.0..=1.0).contains(&x).then(|| pmap_raw(x))
}

/// Geometry and motor range of the agent.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BodyModel {
    /// Half the distance between the two receptors.
    pub receptor_half_gap: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub grid_step: f64,
}

impl Default for BodyModel {
    fn default() -> Self {
        BodyModel {
            receptor_half_gap: 0.05,
            p_min: 0.0,
            p_max: 1.0,
            grid_step: 0.001,
        }
    }
}

impl BodyModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.receptor_half_gap > 0.0) {
            return Err(Error::Config("receptor_half_gap must be positive".into()));
        }
        if !(0.0 <= self.p_min && self.p_min < self.p_max && self.p_max <= 1.0) {
            return Err(Error::Config(format!(
                "need 0 <= p_min < p_max <= 1, got [{}, {}]",
                self.p_min, self.p_max
            )));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::Config("grid_step must be positive".into()));
        }
        let steps = (self.p_max - self.p_min) / self.grid_step;
        if ((steps - steps.round()) * self.grid_step).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "grid_step {} does not divide [{}, {}]",
                self.grid_step, self.p_min, self.p_max
            )));
        }
        Ok(())
    }

    pub fn grid_len(&self) -> usize {
        ((self.p_max - self.p_min) / self.grid_step).round() as usize + 1
    }

    /// Proprioception grid, `p_min..=p_max` in steps of `grid_step`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_len();
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.p_max
                } else {
                    self.p_min + i as f64 * self.grid_step
                }
            })
            .collect()
    }

    /// Receptor world positions for a mid-point at `x`.
    pub fn receptor_positions(&self, x: f64) -> [f64; N_RECEPTORS] {
        [x - self.receptor_half_gap, x + self.receptor_half_gap]
    }
}

/// One row of a scan: proprioception and the receptor excitations it produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanEntry {
    pub p: f64,
    pub s: [f64; N_RECEPTORS],
}

/// A full sweep of the motor range in one environment state.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub entries: Vec<ScanEntry>,
    pub environment_tag: String,
}

impl Scan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn p_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.p)
    }

    /// Largest excitation of any receptor over the scan.
    pub fn max_excitation(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.s)
            .fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &Scan) -> bool {
        self.len() == other.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.p.to_bits() == b.p.to_bits())
    }

    /// CSV with header `p,s1,s2`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 72);
        out.push_str("p,s1,s2\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", fmt17(e.p), fmt17(e.s[0]), fmt17(e.s[1])));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        persist::write_file(path, &self.to_csv())
    }

    pub fn read_csv(path: &Path, environment_tag: impl Into<String>) -> Result<Scan> {
        let rows = persist::read_csv(path, &["p", "s1", "s2"])?;
        Ok(Scan {
            entries: rows
                .into_iter()
                .map(|r| ScanEntry {
                    p: r[0],
                    s: [r[1], r[2]],
                })
                .collect(),
            environment_tag: environment_tag.into(),
        })
    }
}

/// Mid-point world positions `pmap_inv(p_i)` for every grid point of `body`.
pub fn grid_positions(body: &BodyModel) -> Result<Vec<f64>> {
    body.grid().into_iter().map(pmap_inv).collect()
}

/// Sweeps the motor range and tabulates `(p, s1, s2)`.
pub fn scan(env: &Environment, body: &BodyModel) -> Result<Scan> {
    body.validate()?;
    let positions = grid_positions(body)?;
    Ok(scan_at(env, body, &positions))
}

/// Like [`scan`], reusing mid-point positions from [`grid_positions`].
pub fn scan_at(env: &Environment, body: &BodyModel, positions: &[f64]) -> Scan {
    let entries = body
        .grid()
        .into_iter()
        .zip(positions)
        .map(|(p, &x)| ScanEntry {
            p,
            s: body.receptor_positions(x).map(|r| env.luminance(r)),
        })
        .collect();
    Scan {
        entries,
        environment_tag: environment_tag(env),
    }
}

fn environment_tag(env: &Environment) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in env
        .sources
        .iter()
        .map(|s| s.position)
        .chain(std::iter::once(env.offset))
    {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(pmap(0.0).unwrap(), 0.0);
        assert!((pmap(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pmap_inv(0.0).unwrap(), 0.0);
        assert_eq!(pmap_inv(1.0).unwrap(), 1.0);
    }

    #[test]
    fn singular_point_value_and_slope() {
        assert!((pmap(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!(pmap_slope(0.25).abs() < 1e-15);
        assert!(pmap_slope(0.75).abs() < 1e-15);
        // finite-difference slope agrees
        let h = 1e-6;
        let fd = (pmap(0.25 + h).unwrap() - pmap(0.25 - h).unwrap()) / (2.0 * h);
        assert!(fd.abs() < 1e-9);
    }

    #[test]
    fn inverse_round_trip() {
        let x = pmap_inv(pmap(0.37).unwrap()).unwrap();
        assert!((x - 0.37).abs() < 1e-9);
        assert!((pmap_inv(0.5).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(pmap(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(pmap(1.1), Err(Error::Domain { .. })));
        assert!(matches!(pmap_inv(1.0001), Err(Error::Domain { .. })));
        assert!(matches!(pmap_inv(f64::NAN), Err(Error::Domain { .. })));
    }

    #[test]
    fn default_grid() {
        let body = BodyModel::default();
        body.validate().unwrap();
        let g = body.grid();
        assert_eq!(g.len(), 1001);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1000], 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bad_bodies() {
        let b = BodyModel {
            grid_step: 0.0007,
            ..BodyModel::default()
        };
        assert!(b.validate().is_err());
        let b = BodyModel {
            receptor_half_gap: 0.0,
            ..BodyModel::default()
        };
        assert!(b.validate().is_err());
    }

    #[test]
    fn dark_scan() {
        let s = scan(&Environment::empty(), &BodyModel::default()).unwrap();
        assert_eq!(s.len(), 1001);
        assert!(s.entries.iter().all(|e| e.s == [0.0, 0.0]));
    }

    #[test]
    fn receptor_one_in_front_of_source() {
        let body = BodyModel::default();
        let i = 321;
        let x = pmap_inv(body.grid()[i]).unwrap();
        let env = Environment::new([x - 0.05]);
        let s = scan(&env, &body).unwrap();
        assert_eq!(s.entries[i].s[0], 1.0);
        let best = s
            .entries
            .iter()
            .map(|e| e.s[0])
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, 1.0);
    }

    #[test]
    fn ground_truth_displacements() {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            assert!((ground_truth_phi(0.0, p).unwrap() - p).abs() < 1e-12);
        }
        assert!((ground_truth_phi(0.5, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(ground_truth_phi(0.5, 0.9), None);
    }

    #[test]
    fn near_maximal_displacement_leaves_five_percent_overlap() {
        let body = BodyModel::default();
        let xs: Vec<f64> = body
            .grid()
            .into_iter()
            .filter(|&p| ground_truth_phi(0.95, p).is_some())
            .map(|p| pmap_inv(p).unwrap())
            .collect();
        let span = xs.last().unwrap() - xs.first().unwrap();
        assert!((span - 0.05).abs() < 0.01, "span {span}");
    }

    #[test]
    fn csv_round_trip() {
        let env = Environment::new([0.2, 0.9]);
        let s = scan(&env, &BodyModel::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.csv");
        s.write_csv(&path).unwrap();
        let back = Scan::read_csv(&path, s.environment_tag.clone()).unwrap();
        assert_eq!(back, s);
        assert!(s.to_csv().starts_with("p,s1,s2\n"));
    }
}
