//! Ground-truth physical world: point light sources on a line, the summed
//! luminance field they produce, and rigid displacements of the whole
//! environment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Variance of each source's Gaussian tuning curve, in squared world units.
pub const TUNING_VARIANCE: f64 = 0.1;

/// A point light source on the 1D line of sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LightSource {
    pub position: f64,
}

/// A set of light sources plus the cumulative rigid offset applied to them.
///
/// Serializes as `{"sources": [..], "offset": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub sources: Vec<LightSource>,
    pub offset: f64,
}

impl Environment {
    pub fn new(positions: impl IntoIterator<Item = f64>) -> Self {
        Environment {
            sources: positions
                .into_iter()
                .map(|position| LightSource { position })
                .collect(),
            offset: 0.0,
        }
    }

    pub fn empty() -> Self {
        Environment {
            sources: Vec::new(),
            offset: 0.0,
        }
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    /// Summed excitation at world position `x`.
    ///
    /// Each source contributes an unnormalized Gaussian with peak 1, so the
    /// value lies in `[0, n_sources]`.
    pub fn luminance(&self, x: f64) -> f64 {
        let denom = 2.0 * TUNING_VARIANCE;
        self.sources
            .iter()
            .map(|s| {
                let dx = x - (s.position + self.offset);
                (-dx * dx / denom).exp()
            })
            .sum()
    }

    /// Returns a copy rigidly displaced by `d` world units.
    pub fn shifted(&self, d: f64) -> Environment {
        Environment {
            sources: self.sources.clone(),
            offset: self.offset + d,
        }
    }
}

/// Free-function form of [`Environment::luminance`].
pub fn luminance(env: &Environment, x: f64) -> f64 {
    env.luminance(x)
}

/// Free-function form of [`Environment::shifted`].
pub fn shift_environment(env: &Environment, d: f64) -> Environment {
    env.shifted(d)
}

/// The RNG used for every seeded draw in the crate.
///
/// Independent streams of one seed are addressed through `stream`, which makes
/// the generator splittable without any shared state.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n_sources` positions independently and uniformly on `[lo, hi]`.
pub fn generate_environment(seed: u64, n_sources: usize, lo: f64, hi: f64) -> Result<Environment> {
    generate_on_stream(seed, 0, n_sources, lo, hi)
}

pub(crate) fn generate_on_stream(
    seed: u64,
    stream: u64,
    n_sources: usize,
    lo: f64,
    hi: f64,
) -> Result<Environment> {
    if n_sources == 0 {
        return Err(Error::Config("n_sources must be at least 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::Config(format!(
            "invalid source range [{lo}, {hi}]: need finite lo < hi"
        )));
    }
    let mut rng = seeded_rng(seed, stream);
    Ok(Environment::new(
        (0..n_sources).map(|_| rng.gen_range(lo..=hi)),
    ))
}
