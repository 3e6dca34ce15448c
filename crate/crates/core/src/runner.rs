//! The seeded experiment: scan, displace, detect, extract `φ`, catalogue, then
//! build the metric, embed it, and compare the result with physical position.
//!
//! Every stage can be run on its own against a persisted output directory:
//!
//! ```text
//! out/
//!   environment.json        scan_initial.csv     episodes.csv
//!   catalogue/              manifest.json + phi_NNNN.{csv,json}
//!   metric/                 values.csv, mask.csv, header.json
//!   axioms.json
//!   embedding/              embedding.csv, embedding.json, stress_trace.csv
//!   fig3a_phis.csv  fig3b_metric.csv  fig3c_rescaled.csv
//!   report.json  manifest.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{self, BodyModel, Scan};
use crate::embed::{self, Embedding, SmacofOptions};
use crate::metric::{self, AxiomReport, DistanceMatrix, MatrixHeader};
use crate::persist::{self, fmt17};
use crate::phi::{self, PhiCatalogue};
use crate::stats::{linear_fit, pearson};
use crate::world::{seeded_rng, Environment};
use crate::{Error, Result};

/// RNG stream reserved for displacement draws. Environment draws use the low
/// stream numbers, one per richness attempt.
const DISPLACEMENT_STREAM: u64 = 1 << 63;

/// Every tunable of an experiment. Defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_sources: usize,
    pub source_range: [f64; 2],
    pub n_episodes: usize,
    pub displacement_quantum: f64,
    pub max_cumulative_offset: f64,
    pub change_threshold: f64,
    pub match_tol_rel: f64,
    pub pair_lookup_eps: f64,
    pub metric_step: f64,
    pub tri_slack: f64,
    pub smacof: SmacofOptions,
    pub body: BodyModel,
    /// Draw a fresh environment every this many episodes.
    pub regenerate_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            n_sources: 5,
            source_range: [-4.0, 5.0],
            n_episodes: 191,
            displacement_quantum: 0.01,
            max_cumulative_offset: 0.95,
            change_threshold: phi::DEFAULT_CHANGE_THRESHOLD,
            match_tol_rel: phi::DEFAULT_MATCH_TOL_REL,
            pair_lookup_eps: phi::DEFAULT_PAIR_LOOKUP_EPS,
            metric_step: metric::DEFAULT_METRIC_STEP,
            tri_slack: metric::DEFAULT_TRI_SLACK,
            smacof: SmacofOptions::default(),
            body: BodyModel::default(),
            regenerate_every: None,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = persist::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("displacement_quantum", self.displacement_quantum),
            ("max_cumulative_offset", self.max_cumulative_offset),
            ("change_threshold", self.change_threshold),
            ("match_tol_rel", self.match_tol_rel),
            ("pair_lookup_eps", self.pair_lookup_eps),
            ("metric_step", self.metric_step),
            ("smacof.tol", self.smacof.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tri_slack < 0.0 {
            return Err(Error::Config("tri_slack must be non-negative".into()));
        }
        if self.max_cumulative_offset >= 1.0 {
            return Err(Error::Config(
                "max_cumulative_offset must stay below the scanned range of 1".into(),
            ));
        }
        if self.max_cumulative_offset < self.displacement_quantum {
            return Err(Error::Config(
                "max_cumulative_offset admits no non-zero displacement".into(),
            ));
        }
        if self.n_sources == 0 {
            return Err(Error::Config("n_sources must be at least 1".into()));
        }
        if !(self.source_range[0] < self.source_range[1]) {
            return Err(Error::Config(format!(
                "invalid source_range {:?}",
                self.source_range
            )));
        }
        if self.regenerate_every == Some(0) {
            return Err(Error::Config("regenerate_every must be at least 1".into()));
        }
        self.body.validate()?;
        metric::sample_grid(self.metric_step)?;
        Ok(())
    }

    fn max_quanta(&self) -> i64 {
        (self.max_cumulative_offset / self.displacement_quantum + 1e-9).floor() as i64
    }
}

/// Draws the next displacement as a multiple of the quantum, in quanta.
///
/// `k` is uniform on `[-K, K] \ {0}` with `K = max_cumulative_offset / quantum`,
/// resampled until the cumulative offset stays within `±K` as well.
pub fn draw_displacement_quanta<R: Rng>(
    rng: &mut R,
    cumulative_quanta: i64,
    cfg: &ExperimentConfig,
) -> Result<i64> {
    let kmax = cfg.max_quanta();
    if cumulative_quanta.abs() > kmax {
        return Err(Error::Contract(format!(
            "cumulative offset of {cumulative_quanta} quanta exceeds ±{kmax}"
        )));
    }
    loop {
        let k = rng.gen_range(-kmax..=kmax);
        if k != 0 && (cumulative_quanta + k).abs() <= kmax {
            return Ok(k);
        }
    }
}

/// Real-valued form of [`draw_displacement_quanta`].
pub fn draw_displacement<R: Rng>(
    rng: &mut R,
    cumulative_offset: f64,
    cfg: &ExperimentConfig,
) -> Result<f64> {
    let q = cfg.displacement_quantum;
    let cum = (cumulative_offset / q).round() as i64;
    if (cum as f64 * q - cumulative_offset).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "cumulative offset {cumulative_offset} is not a multiple of {q}"
        )));
    }
    Ok(draw_displacement_quanta(rng, cum, cfg)? as f64 * q)
}

/// What happened in one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Extracted,
    NoChange,
    ExtractionFailed,
}

impl EpisodeStatus {
    fn as_str(self) -> &'static str {
        match self {
            EpisodeStatus::Extracted => "extracted",
            EpisodeStatus::NoChange => "no_change",
            EpisodeStatus::ExtractionFailed => "extraction_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode_id: u64,
    pub d: f64,
    pub cumulative_offset: f64,
    pub environment: usize,
    pub status: EpisodeStatus,
    pub n_pairs: usize,
}

/// Outcome of the episode loop.
#[derive(Debug, Clone)]
pub struct EpisodeRun {
    /// One entry per environment used, in order.
    pub environments: Vec<Environment>,
    pub initial_scan: Scan,
    pub catalogue: PhiCatalogue,
    pub records: Vec<EpisodeRecord>,
}

impl EpisodeRun {
    pub fn success_count(&self) -> usize {
        self.catalogue.len()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn environment_for_epoch(cfg: &ExperimentConfig, epoch: usize) -> Result<Environment> {
    let seed = if epoch == 0 {
        cfg.seed
    } else {
        splitmix64(cfg.seed ^ epoch as u64)
    };
    let (env, attempts) = phi::generate_rich_environment(
        seed,
        cfg.n_sources,
        (cfg.source_range[0], cfg.source_range[1]),
        &cfg.body,
        cfg.match_tol_rel,
        cfg.max_cumulative_offset,
    )?;
    log::info!("environment {epoch}: accepted after {} draw(s)", attempts + 1);
    Ok(env)
}

/// Runs the displacement episodes and collects the `φ` catalogue.
///
/// Each episode displaces the environment, rescans, and compares the new scan
/// with the previous one. Episodes where no change is detected or too few
/// coincidences are found are recorded and skipped.
pub fn run_episodes(cfg: &ExperimentConfig) -> Result<EpisodeRun> {
    cfg.validate()?;
    let body = cfg.body;
    let positions = agent::grid_positions(&body)?;
    let q = cfg.displacement_quantum;
    let mut rng = seeded_rng(cfg.seed, DISPLACEMENT_STREAM);

    let mut environments = vec![environment_for_epoch(cfg, 0)?];
    let mut base = environments[0].clone();
    let mut cum: i64 = 0;
    let initial_scan = agent::scan_at(&base, &body, &positions);
    let mut old = initial_scan.clone();
    let mut catalogue = PhiCatalogue::new(cfg.match_tol_rel, cfg.pair_lookup_eps)?;
    let mut records = Vec::with_capacity(cfg.n_episodes);

    for episode in 0..cfg.n_episodes {
        if let Some(every) = cfg.regenerate_every {
            if episode > 0 && episode % every == 0 {
                let env = environment_for_epoch(cfg, environments.len())?;
                environments.push(env.clone());
                base = env;
                cum = 0;
                old = agent::scan_at(&base, &body, &positions);
            }
        }
        let k = draw_displacement_quanta(&mut rng, cum, cfg)?;
        cum += k;
        let d = k as f64 * q;
        let env = Environment {
            sources: base.sources.clone(),
            offset: cum as f64 * q,
        };
        let new = agent::scan_at(&env, &body, &positions);
        let episode_id = episode as u64;

        let (status, n_pairs) = if !phi::detect_change(&old, &new, cfg.change_threshold)? {
            log::info!("episode {episode}: d = {d:+.2}, no change detected");
            (EpisodeStatus::NoChange, 0)
        } else {
            match phi::match_coincidences(&old, &new, episode_id, cfg.match_tol_rel) {
                Ok(mut f) => {
                    f.true_d = Some(d);
                    let n = f.len();
                    catalogue.push(f);
                    (EpisodeStatus::Extracted, n)
                }
                Err(Error::Extraction(msg)) => {
                    log::info!("episode {episode}: d = {d:+.2}, skipped: {msg}");
                    (EpisodeStatus::ExtractionFailed, 0)
                }
                Err(e) => return Err(e),
            }
        };
        records.push(EpisodeRecord {
            episode_id,
            d,
            cumulative_offset: cum as f64 * q,
            environment: environments.len() - 1,
            status,
            n_pairs,
        });
        old = new;
    }

    Ok(EpisodeRun {
        environments,
        initial_scan,
        catalogue,
        records,
    })
}

/// Comparison of the rescaled proprioception with ground-truth position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    /// Pearson correlation of normalized `P` with ground-truth `x`.
    pub pearson_r: f64,
    /// Largest residual of the least-squares fit `P ≈ a·x + b`.
    pub max_affine_residual: f64,
    pub affine_slope: f64,
    pub affine_intercept: f64,
    /// Pearson correlation of raw `p` with `x`.
    pub rho_baseline_r: f64,
    pub episode_success_count: usize,
}

/// Scores normalized `P` against `x = pmap_inv(p)` over the metric sample.
pub fn evaluate_isometry(
    normalized: &[f64],
    sample: &[f64],
    episode_success_count: usize,
) -> Result<IsometryReport> {
    if normalized.len() != sample.len() {
        return Err(Error::Contract("embedding and sample lengths differ".into()));
    }
    let x: Vec<f64> = sample
        .iter()
        .map(|&p| agent::pmap_inv(p))
        .collect::<Result<_>>()?;
    let degenerate = || Error::Degenerate("constant series in isometry evaluation".into());
    let pearson_r = pearson(normalized, &x).ok_or_else(degenerate)?;
    let rho_baseline_r = pearson(sample, &x).ok_or_else(degenerate)?;
    let (a, b) = linear_fit(&x, normalized).ok_or_else(degenerate)?;
    let max_affine_residual = x
        .iter()
        .zip(normalized)
        .map(|(xi, pi)| (pi - (a * xi + b)).abs())
        .fold(0.0, f64::max);
    Ok(IsometryReport {
        pearson_r,
        max_affine_residual,
        affine_slope: a,
        affine_intercept: b,
        rho_baseline_r,
        episode_success_count,
    })
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub episodes: EpisodeRun,
    pub matrix: DistanceMatrix,
    pub axioms: AxiomReport,
    pub embedding: Embedding,
    pub report: IsometryReport,
}

/// Builds the metric and its axiom report from a catalogue.
pub fn metric_stage(
    catalogue: &PhiCatalogue,
    cfg: &ExperimentConfig,
) -> Result<(DistanceMatrix, AxiomReport)> {
    let m = metric::build_distance_matrix(catalogue, cfg.metric_step)?;
    let axioms = metric::check_metric_axioms(&m, cfg.tri_slack);
    Ok((m, axioms))
}

/// Classical initialization, SMACOF and normalization.
pub fn embed_stage(m: &DistanceMatrix, cfg: &ExperimentConfig) -> Result<Embedding> {
    let init = embed::classical_init(m)?;
    let e = embed::smacof_1d(m, &init, cfg.smacof)?;
    embed::normalize_embedding(&e, &m.sample)
}

/// Runs the full pipeline in memory. Persists everything when
/// `cfg.output_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        probe_writable(dir)?;
    }
    let episodes = run_episodes(cfg)?;
    if episodes.catalogue.is_empty() {
        return Err(Error::Experiment(format!(
            "empty catalogue: none of {} episode(s) produced a displacement function",
            cfg.n_episodes
        )));
    }
    let (matrix, axioms) = metric_stage(&episodes.catalogue, cfg)?;
    let embedding = embed_stage(&matrix, cfg).map_err(pipeline_failure)?;
    let normalized = embedding.normalized.as_deref().expect("normalized by embed_stage");
    let report = evaluate_isometry(normalized, &matrix.sample, episodes.success_count())?;
    let outcome = ExperimentOutcome {
        episodes,
        matrix,
        axioms,
        embedding,
        report,
    };
    if let Some(dir) = &cfg.output_dir {
        write_outcome(&outcome, cfg, dir)?;
    }
    Ok(outcome)
}

fn pipeline_failure(e: Error) -> Error {
    match e {
        Error::Embedding(msg) | Error::Degenerate(msg) => Error::Experiment(msg),
        other => other,
    }
}

fn probe_writable(dir: &Path) -> Result<()> {
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Persists the outputs of [`run_episodes`].
pub fn write_episodes(run: &EpisodeRun, dir: &Path) -> Result<()> {
    persist::write_json(&dir.join("environment.json"), &run.environments[0])?;
    for (k, env) in run.environments.iter().enumerate().skip(1) {
        persist::write_json(&dir.join(format!("environment_{k}.json")), env)?;
    }
    run.initial_scan.write_csv(&dir.join("scan_initial.csv"))?;
    let mut csv = String::from("episode_id,d,cumulative_offset,environment,status,n_pairs\n");
    for r in &run.records {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.episode_id,
            fmt17(r.d),
            fmt17(r.cumulative_offset),
            r.environment,
            r.status.as_str(),
            r.n_pairs
        ));
    }
    persist::write_file(&dir.join("episodes.csv"), &csv)?;
    run.catalogue.write_dir(&dir.join("catalogue"))
}

fn write_metric(m: &DistanceMatrix, axioms: &AxiomReport, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    m.write_dir(
        &dir.join("metric"),
        &MatrixHeader {
            sample: m.sample.clone(),
            step: cfg.metric_step,
            seed: Some(cfg.seed),
        },
    )?;
    persist::write_json(&dir.join("axioms.json"), axioms)
}

fn write_embedding(e: &Embedding, sample: &[f64], dir: &Path) -> Result<()> {
    let edir = dir.join("embedding");
    e.write_dir(&edir, sample)?;
    let mut trace = String::from("iteration,stress1\n");
    for (i, s) in e.stress_trace.iter().enumerate() {
        trace.push_str(&format!("{i},{}\n", fmt17(*s)));
    }
    persist::write_file(&edir.join("stress_trace.csv"), &trace)
}

/// Writes the three plot tables:
///
/// * `fig3a_phis.csv`: `episode_id,p,p_prime`, one block per catalogued `φ`
/// * `fig3b_metric.csv`: `p_i,p_j,mu,defined` over the full sample grid
/// * `fig3c_rescaled.csv`: `p,P,x`, one row per sample point
pub fn emit_plot_data(
    catalogue: &PhiCatalogue,
    m: &DistanceMatrix,
    normalized: &[f64],
    dir: &Path,
) -> Result<()> {
    let mut a = String::from("episode_id,p,p_prime\n");
    for phi in &catalogue.items {
        for pr in phi.pairs() {
            a.push_str(&format!("{},{},{}\n", phi.episode_id, fmt17(pr.p), fmt17(pr.p_prime)));
        }
    }
    persist::write_file(&dir.join("fig3a_phis.csv"), &a)?;

    let n = m.len();
    let mut b = String::with_capacity(n * n * 80);
    b.push_str("p_i,p_j,mu,defined\n");
    for i in 0..n {
        for j in 0..n {
            b.push_str(&format!(
                "{},{},{},{}\n",
                fmt17(m.sample[i]),
                fmt17(m.sample[j]),
                fmt17(m.value(i, j)),
                u8::from(m.is_defined(i, j))
            ));
        }
    }
    persist::write_file(&dir.join("fig3b_metric.csv"), &b)?;

    let mut c = String::from("p,P,x\n");
    for (p, big_p) in m.sample.iter().zip(normalized) {
        let x = agent::pmap_inv(*p)?;
        c.push_str(&format!("{},{},{}\n", fmt17(*p), fmt17(*big_p), fmt17(x)));
    }
    persist::write_file(&dir.join("fig3c_rescaled.csv"), &c)
}

fn write_report(report: &IsometryReport, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    persist::write_json(&dir.join("report.json"), report)?;
    write_manifest(cfg, dir)
}

fn write_outcome(o: &ExperimentOutcome, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    write_episodes(&o.episodes, dir)?;
    write_metric(&o.matrix, &o.axioms, cfg, dir)?;
    write_embedding(&o.embedding, &o.matrix.sample, dir)?;
    let normalized = o.embedding.normalized.as_deref().expect("normalized");
    emit_plot_data(&o.episodes.catalogue, &o.matrix, normalized, dir)?;
    write_report(&o.report, cfg, dir)
}

/// Writes `manifest.json`: the config (without `output_dir`) and a SHA-256 of
/// every other file in `dir`.
pub fn write_manifest(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    let mut artifacts = BTreeMap::new();
    for rel in files {
        if rel == "manifest.json" {
            continue;
        }
        let path = dir.join(&rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        artifacts.insert(rel, hex::encode(Sha256::digest(&bytes)));
    }
    let echo = ExperimentConfig {
        output_dir: None,
        ..cfg.clone()
    };
    persist::write_json(
        &dir.join("manifest.json"),
        &serde_json::json!({ "config": echo, "artifacts": artifacts }),
    )
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walked from root");
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

/// Stage entry points used by the CLI. Each reads what the previous stage left
/// in `dir` and writes its own artifacts there.
pub mod stages {
    use super::*;

    pub fn phi(cfg: &ExperimentConfig, dir: &Path) -> Result<EpisodeRun> {
        let run = run_episodes(cfg)?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_episodes(&run, dir)?;
        if run.catalogue.is_empty() {
            return Err(Error::Experiment("empty catalogue".into()));
        }
        Ok(run)
    }

    pub fn metric(cfg: &ExperimentConfig, dir: &Path) -> Result<(DistanceMatrix, AxiomReport)> {
        let cat = PhiCatalogue::read_dir(&dir.join("catalogue"))?;
        if cat.is_empty() {
            return Err(Error::Experiment("empty catalogue".into()));
        }
        let (m, axioms) = metric_stage(&cat, cfg)?;
        write_metric(&m, &axioms, cfg, dir)?;
        Ok((m, axioms))
    }

    pub fn embed(cfg: &ExperimentConfig, dir: &Path) -> Result<Embedding> {
        let (m, _) = DistanceMatrix::read_dir(&dir.join("metric"))?;
        let e = embed_stage(&m, cfg).map_err(pipeline_failure)?;
        write_embedding(&e, &m.sample, dir)?;
        Ok(e)
    }

    pub fn report(cfg: &ExperimentConfig, dir: &Path) -> Result<IsometryReport> {
        let cat = PhiCatalogue::read_dir(&dir.join("catalogue"))?;
        let (m, _) = DistanceMatrix::read_dir(&dir.join("metric"))?;
        let (sample, normalized, _) = Embedding::read_dir(&dir.join("embedding"))?;
        if sample.len() != m.len() || sample.iter().zip(&m.sample).any(|(a, b)| a != b) {
            return Err(Error::Artifact {
                path: dir.join("embedding"),
                msg: "embedding sample does not match the metric sample".into(),
            });
        }
        let report = evaluate_isometry(&normalized, &sample, cat.len())?;
        emit_plot_data(&cat, &m, &normalized, dir)?;
        write_report(&report, cfg, dir)?;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displacements_are_quantized_and_bounded() {
        let cfg = ExperimentConfig::default();
        let mut rng = seeded_rng(1, DISPLACEMENT_STREAM);
        let mut cum = 0i64;
        for _ in 0..2000 {
            let k = draw_displacement_quanta(&mut rng, cum, &cfg).unwrap();
            assert!(k != 0 && k.abs() <= 95);
            cum += k;
            assert!(cum.abs() <= 95);
        }
        let d = draw_displacement(&mut rng, 0.3, &cfg).unwrap();
        let k = (d / 0.01).round();
        assert!((d - k * 0.01).abs() < 1e-15 && k != 0.0 && d.abs() <= 0.95);
    }

    #[test]
    fn displacement_sequence_is_reproducible() {
        let cfg = ExperimentConfig::default();
        let draw = || {
            let mut rng = seeded_rng(5, DISPLACEMENT_STREAM);
            let mut cum = 0;
            (0..50)
                .map(|_| {
                    let k = draw_displacement_quanta(&mut rng, cum, &cfg).unwrap();
                    cum += k;
                    k
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn out_of_bounds_cumulative_offset_is_rejected() {
        let cfg = ExperimentConfig::default();
        let mut rng = seeded_rng(1, 0);
        assert!(draw_displacement_quanta(&mut rng, 96, &cfg).is_err());
        assert!(draw_displacement(&mut rng, 0.005, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        ExperimentConfig::default().validate().unwrap();
        let bad = ExperimentConfig {
            match_tol_rel: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            max_cumulative_offset: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            regenerate_every: Some(0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_json_defaults_and_unknown_fields() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.n_episodes, 191);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sed": 3}"#).is_err());
    }

    #[test]
    fn isometry_of_exact_and_raw() {
        let sample = metric::sample_grid(0.01).unwrap();
        let x: Vec<f64> = sample.iter().map(|&p| agent::pmap_inv(p).unwrap()).collect();
        let r = evaluate_isometry(&x, &sample, 0).unwrap();
        assert!((r.pearson_r - 1.0).abs() < 1e-12);
        assert!(r.max_affine_residual < 1e-12);
        let raw = evaluate_isometry(&sample, &sample, 0).unwrap();
        assert_eq!(raw.pearson_r, raw.rho_baseline_r);
        assert!(raw.rho_baseline_r < 0.99);
    }

    #[test]
    fn zero_episodes_is_an_experiment_failure() {
        let cfg = ExperimentConfig {
            n_episodes: 0,
            ..Default::default()
        };
        match run_experiment(&cfg) {
            Err(Error::Experiment(msg)) => assert!(msg.contains("empty catalogue")),
            other => panic!("expected experiment failure, got {other:?}"),
        }
    }
}
