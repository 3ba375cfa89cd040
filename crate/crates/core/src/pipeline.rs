//! The experiment pipeline behind the command line: snapshot generation,
//! per-trial solves over the sample schedule, and trial-averaged reports.
//!
//! Layout of an output directory:
//!
//! ```text
//! config.txt                 canonical config the data was generated with
//! reference.scsc             reference coefficients shared by all trials
//! trial_000.scsd ...         samples and snapshots, largest m of the schedule
//! results_<method>.csv       one row per (trial, m)
//! diagnostics_<method>.csv   one row per Bregman iteration (scs, pcs)
//! mc_stats.csv               nodal Monte Carlo mean and std
//! coeffs/<method>_t<trial>_m<m>.scsc   recovered coefficients (scs, pcs)
//! report.csv, report_mean.dat, report_std.dat
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::coefficient::{AffineCoefficient, CoefficientModel};
use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::estimators::{btol_rule, error_report, gpc_mean, gpc_std_field, mc_estimate, reference_oracle};
use crate::fem::{Mesh, NodalField};
use crate::hilbert::{Gram, HilbertVec, Norm};
use crate::io::{CoefficientTable, SnapshotSet};
use crate::multiindex::IndexSet;
use crate::pcs::pcs_solve;
use crate::polychaos::{design_matrix, draw_samples, sampling_matrix};
use crate::scs::{bregman_solve, spectral_setup, SolverConfig};
use crate::snapshots::solve_snapshots;

// keeps reference and planted draws apart from the trial streams seed0 + t
const REFERENCE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const PLANT_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Scs,
    Pcs,
    Mc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Scs, Method::Pcs, Method::Mc];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Scs => "scs",
            Method::Pcs => "pcs",
            Method::Mc => "mc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scs" => Ok(Method::Scs),
            "pcs" => Ok(Method::Pcs),
            "mc" => Ok(Method::Mc),
            other => Err(Error::Config(format!("unknown method '{other}' (expected scs, pcs or mc)"))),
        }
    }
}

pub fn config_path(dir: &Path) -> PathBuf {
    dir.join("config.txt")
}

pub fn reference_path(dir: &Path) -> PathBuf {
    dir.join("reference.scsc")
}

pub fn trial_path(dir: &Path, trial: usize) -> PathBuf {
    dir.join(format!("trial_{trial:03}.scsd"))
}

pub fn results_path(dir: &Path, method: Method) -> PathBuf {
    dir.join(format!("results_{method}.csv"))
}

pub fn diagnostics_path(dir: &Path, method: Method) -> PathBuf {
    dir.join(format!("diagnostics_{method}.csv"))
}

/// Nodal Monte Carlo mean and standard deviation per trial and `m`.
pub fn statistics_path(dir: &Path) -> PathBuf {
    dir.join("mc_stats.csv")
}

pub fn coefficients_path(dir: &Path, method: Method, trial: usize, m: usize) -> PathBuf {
    dir.join("coeffs").join(format!("{method}_t{trial:03}_m{m}.scsc"))
}

/// Objects every stage derives from the config alone.
pub struct Setup {
    pub config: ExperimentConfig,
    pub set: IndexSet,
    pub mesh: Mesh,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            set: IndexSet::total_degree(config.d, config.p)?,
            mesh: Mesh::build(config.mesh_n, config.subdivisions)?,
        })
    }

    pub fn gram(&self) -> Gram {
        self.mesh.gram().clone()
    }

    fn model(&self) -> Result<CoefficientModel> {
        let field = AffineCoefficient::new(self.config.d, self.config.lc)?;
        Ok(match self.config.mode {
            Mode::Log => CoefficientModel::Log(field),
            _ => CoefficientModel::Affine(field),
        })
    }

    fn table(&self, coords: DMatrix<f64>) -> CoefficientTable {
        CoefficientTable {
            mesh_n: self.config.mesh_n,
            subdivisions: self.config.subdivisions,
            d: self.config.d,
            coords,
        }
    }
}

/// A planted coefficient vector: `s` nonzero coordinates (always including
/// the constant term) with uniform nodal values in `(-1, 1)`.
pub fn plant_sparse(n: usize, gram: Gram, s: usize, rng: &mut impl Rng) -> Result<HilbertVec> {
    if s == 0 || s > n {
        return Err(Error::Config(format!("sparsity {s} must lie in 1..={n}")));
    }
    let k = gram.nrows();
    let mut coords = DMatrix::zeros(n, k);
    let mut support = vec![0];
    support.extend(sample_indices(rng, n - 1, s - 1).into_iter().map(|i| i + 1));
    support.sort_unstable();
    for &i in &support {
        for node in 0..k {
            coords[(i, node)] = rng.random_range(-1.0..1.0);
        }
    }
    HilbertVec::new(coords, gram)
}

/// A dense perturbation with `||e||_{V,2} = size`.
pub fn dense_tail(n: usize, gram: Gram, size: f64, rng: &mut impl Rng) -> Result<HilbertVec> {
    let k = gram.nrows();
    let raw = HilbertVec::new(DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0)), gram)?;
    let norm = raw.mixed_norm(Norm::Two);
    Ok(if norm > 0.0 { raw.scaled(size / norm) } else { raw })
}

/// Planted truth of a synthetic study: `(reference, data-generating vector)`.
fn synthetic_truth(setup: &Setup) -> Result<(HilbertVec, HilbertVec)> {
    let cfg = &setup.config;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed0 ^ PLANT_STREAM);
    let planted = plant_sparse(setup.set.len(), setup.gram(), cfg.sparsity, &mut rng)?;
    let tail = dense_tail(setup.set.len(), setup.gram(), cfg.noise * planted.mixed_norm(Norm::Two), &mut rng)?;
    let truth = planted.add(&tail)?;
    Ok((planted, truth))
}

#[derive(Clone, Debug)]
pub struct GenerateSummary {
    pub trials: usize,
    pub samples_per_trial: usize,
    pub nodes: usize,
}

/// Draws samples, solves (or synthesizes) snapshots and writes every trial
/// plus the shared reference into `dir`.
pub fn generate(config: &ExperimentConfig, dir: &Path) -> Result<GenerateSummary> {
    let setup = Setup::new(config)?;
    std::fs::create_dir_all(dir)?;
    let m_max = *config.schedule().last().expect("schedule is never empty");
    let d = config.d;

    let (reference, truth, model) = match config.mode {
        Mode::Synthetic => {
            let (reference, truth) = synthetic_truth(&setup)?;
            (reference, Some(truth), None)
        }
        Mode::Affine | Mode::Log => {
            let model = setup.model()?;
            let m_ref = config.reference_samples();
            info!("reference: least squares on {m_ref} samples");
            let c = reference_oracle(&setup.set, &setup.mesh, &model, m_ref, config.seed0 ^ REFERENCE_STREAM)?;
            (c, None, Some(model))
        }
    };

    for trial in 0..config.trials {
        let samples = draw_samples(d, m_max, config.trial_seed(trial));
        let solutions = match (&truth, &model) {
            (Some(truth), _) => design_matrix(&setup.set, &samples)? * truth.coords(),
            (None, Some(model)) => solve_snapshots(&setup.mesh, model, &samples)?,
            (None, None) => unreachable!(),
        };
        info!("trial {trial}: {m_max} snapshots");
        SnapshotSet {
            mesh_n: config.mesh_n,
            subdivisions: config.subdivisions,
            samples,
            solutions,
        }
        .write(&trial_path(dir, trial))?;
    }
    setup.table(reference.into_coords()).write(&reference_path(dir))?;
    std::fs::write(config_path(dir), config.canonical())?;
    Ok(GenerateSummary {
        trials: config.trials,
        samples_per_trial: m_max,
        nodes: setup.mesh.num_dofs(),
    })
}

/// Checks that `dir` was generated from `config`.
fn check_generated(config: &ExperimentConfig, dir: &Path) -> Result<()> {
    let path = config_path(dir);
    if !path.exists() {
        return Err(Error::Config(format!("{} not found; run generate first", path.display())));
    }
    let stored = ExperimentConfig::load(&path)?;
    if stored.config_id() != config.config_id() {
        return Err(Error::MixedConfigs(stored.config_id(), config.config_id()));
    }
    Ok(())
}

/// Outcome of one `(trial, m)` run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub method: Method,
    pub trial: usize,
    pub m: usize,
    pub rel_err_mean: f64,
    pub rel_err_std: f64,
    pub converged: bool,
    pub wall_seconds: f64,
    pub config_id: String,
    /// Digest of the measurement matrix, equal across methods within a trial.
    pub a_checksum: String,
}

impl RunResult {
    pub fn flag(&self) -> &'static str {
        if self.converged {
            "converged"
        } else {
            "not_converged"
        }
    }
}

/// One Bregman iteration of one run, as written to the diagnostics CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub trial: usize,
    pub m: usize,
    pub node: Option<usize>,
    pub bregman_iter: usize,
    pub fpc_stages: usize,
    pub inner_iters: usize,
    pub residual: f64,
    pub support_size: usize,
    pub b_tol: f64,
}

#[derive(Clone, Debug)]
pub struct SolveSummary {
    pub results: Vec<RunResult>,
    pub diagnostics: Vec<DiagnosticRow>,
}

impl SolveSummary {
    pub fn not_converged(&self) -> usize {
        self.results.iter().filter(|r| !r.converged).count()
    }
}

fn checksum(a: &DMatrix<f64>) -> String {
    let mut h = Sha256::new();
    for v in a.iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

struct TrialOutput {
    results: Vec<RunResult>,
    diagnostics: Vec<DiagnosticRow>,
    coefficients: Vec<(usize, DMatrix<f64>)>,
    // mc only: (m, mean, std)
    statistics: Vec<(usize, NodalField, NodalField)>,
}

fn solve_trial(
    setup: &Setup,
    method: Method,
    trial: usize,
    data: &SnapshotSet,
    reference: &HilbertVec,
    solver: &SolverConfig,
) -> Result<TrialOutput> {
    let cfg = &setup.config;
    let gram = setup.gram();
    let ref_mean = gpc_mean(reference);
    let ref_std = gpc_std_field(reference);
    let config_id = cfg.config_id();
    let mut out = TrialOutput {
        results: Vec::new(),
        diagnostics: Vec::new(),
        coefficients: Vec::new(),
        statistics: Vec::new(),
    };
    for m in cfg.schedule() {
        let (samples, snaps) = data.prefix(m)?;
        let a = sampling_matrix(&setup.set, &samples)?;
        let a_checksum = checksum(&a.a);
        let start = Instant::now();
        let (mean, std, converged) = match method {
            Method::Mc => {
                let (mean, std) = mc_estimate(&snaps)?;
                out.statistics.push((m, mean.clone(), std.clone()));
                (mean, std, true)
            }
            Method::Scs | Method::Pcs => {
                let u = HilbertVec::new(&snaps / (m as f64).sqrt(), gram.clone())?;
                let (problem, un) = spectral_setup(&a, &u, solver.xi)?;
                let config = SolverConfig {
                    b_tol: btol_rule(&problem, &un, reference),
                    ..solver.clone()
                };
                let (c, converged) = if method == Method::Scs {
                    let (c, diag) = bregman_solve(&problem, &un, &config)?;
                    out.diagnostics.extend(diag.records.iter().map(|r| DiagnosticRow {
                        trial,
                        m,
                        node: None,
                        bregman_iter: r.bregman_iter,
                        fpc_stages: r.fpc_stages,
                        inner_iters: r.inner_iters,
                        residual: r.residual,
                        support_size: r.support_size,
                        b_tol: diag.b_tol,
                    }));
                    (c, diag.converged)
                } else {
                    let (c, nodes) = pcs_solve(&problem, &snaps, gram.clone(), &config)?;
                    for nd in &nodes {
                        let d = &nd.diagnostics;
                        out.diagnostics.extend(d.records.iter().map(|r| DiagnosticRow {
                            trial,
                            m,
                            node: Some(nd.node),
                            bregman_iter: r.bregman_iter,
                            fpc_stages: r.fpc_stages,
                            inner_iters: r.inner_iters,
                            residual: r.residual,
                            support_size: r.support_size,
                            b_tol: d.b_tol,
                        }));
                    }
                    (c, nodes.iter().all(|n| n.diagnostics.converged))
                };
                let stats = (gpc_mean(&c), gpc_std_field(&c));
                out.coefficients.push((m, c.into_coords()));
                (stats.0, stats.1, converged)
            }
        };
        let wall_seconds = start.elapsed().as_secs_f64();
        let (rel_err_mean, rel_err_std) = error_report(&setup.mesh, &mean, &std, &ref_mean, &ref_std)?;
        info!("{method} trial {trial} m {m}: mean {rel_err_mean:.3e} std {rel_err_std:.3e}");
        out.results.push(RunResult {
            method,
            trial,
            m,
            rel_err_mean,
            rel_err_std,
            converged,
            wall_seconds,
            config_id: config_id.clone(),
            a_checksum,
        });
    }
    Ok(out)
}

/// Runs `method` on every trial and every `m` of the schedule and writes
/// the results, diagnostics and coefficient files into `dir`.
pub fn solve(config: &ExperimentConfig, dir: &Path, method: Method) -> Result<SolveSummary> {
    check_generated(config, dir)?;
    let setup = Setup::new(config)?;
    let table = CoefficientTable::read(&reference_path(dir))?;
    let reference = HilbertVec::new(table.coords, setup.gram())?;
    if reference.len() != setup.set.len() {
        return Err(Error::ShapeMismatch(format!(
            "reference has {} coefficients, basis has {}",
            reference.len(),
            setup.set.len()
        )));
    }
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let path = trial_path(dir, t);
            let data = SnapshotSet::read(&path)?;
            if data.solutions.ncols() != setup.mesh.num_dofs()
                || data.samples.first().is_some_and(|y| y.dim() != config.d)
            {
                return Err(Error::Format {
                    path,
                    reason: "snapshot shape does not match the config".into(),
                });
            }
            solve_trial(&setup, method, t, &data, &reference, &config.solver)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = SolveSummary {
        results: Vec::new(),
        diagnostics: Vec::new(),
    };
    if method != Method::Mc {
        std::fs::create_dir_all(dir.join("coeffs"))?;
    }
    let mut stats = (method == Method::Mc)
        .then(|| csv::Writer::from_path(statistics_path(dir)))
        .transpose()?;
    if let Some(w) = stats.as_mut() {
        w.write_record(["trial", "m", "node", "mean", "std"])?;
    }
    for (t, out) in trials.into_iter().enumerate() {
        for (m, coords) in out.coefficients {
            setup.table(coords).write(&coefficients_path(dir, method, t, m))?;
        }
        if let Some(w) = stats.as_mut() {
            for (m, mean, std) in &out.statistics {
                for k in 0..mean.len() {
                    w.write_record([t.to_string(), m.to_string(), k.to_string(), sci(mean[k]), sci(std[k])])?;
                }
            }
        }
        summary.results.extend(out.results);
        summary.diagnostics.extend(out.diagnostics);
    }
    if let Some(mut w) = stats {
        w.flush()?;
    }
    write_results(&results_path(dir, method), &summary.results)?;
    if method != Method::Mc {
        write_diagnostics(&diagnostics_path(dir, method), method, &summary.diagnostics)?;
    }
    Ok(summary)
}

fn sci(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_results(path: &Path, rows: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "trial",
        "m",
        "rel_err_mean",
        "rel_err_std",
        "solver_flag",
        "wall_seconds",
        "config_id",
        "a_checksum",
    ])?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.trial.to_string(),
            r.m.to_string(),
            sci(r.rel_err_mean),
            sci(r.rel_err_std),
            r.flag().to_string(),
            format!("{:.6}", r.wall_seconds),
            r.config_id.clone(),
            r.a_checksum.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<'a>(rec: &'a csv::StringRecord, headers: &csv::StringRecord, name: &str, path: &Path) -> Result<&'a str> {
    headers
        .iter()
        .position(|h| h == name)
        .and_then(|i| rec.get(i))
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            reason: format!("missing column '{name}'"),
        })
}

fn parse_field<T: FromStr>(rec: &csv::StringRecord, headers: &csv::StringRecord, name: &str, path: &Path) -> Result<T> {
    let raw = field(rec, headers, name, path)?;
    raw.parse().map_err(|_| Error::Format {
        path: path.to_path_buf(),
        reason: format!("bad value '{raw}' in column '{name}'"),
    })
}

pub fn read_results(path: &Path) -> Result<Vec<RunResult>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let flag = field(&rec, &headers, "solver_flag", path)?;
        rows.push(RunResult {
            method: field(&rec, &headers, "method", path)?.parse()?,
            trial: parse_field(&rec, &headers, "trial", path)?,
            m: parse_field(&rec, &headers, "m", path)?,
            rel_err_mean: parse_field(&rec, &headers, "rel_err_mean", path)?,
            rel_err_std: parse_field(&rec, &headers, "rel_err_std", path)?,
            converged: flag == "converged",
            wall_seconds: parse_field(&rec, &headers, "wall_seconds", path)?,
            config_id: field(&rec, &headers, "config_id", path)?.to_string(),
            a_checksum: field(&rec, &headers, "a_checksum", path)?.to_string(),
        });
    }
    Ok(rows)
}

pub fn write_diagnostics(path: &Path, method: Method, rows: &[DiagnosticRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let per_node = method == Method::Pcs;
    let mut header = vec!["trial", "m"];
    if per_node {
        header.push("node_id");
    }
    header.extend(["bregman_iter", "fpc_stage", "inner_iters", "residual_V2", "support_size", "b_tol"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.trial.to_string(), r.m.to_string()];
        if per_node {
            rec.push(r.node.map_or(String::new(), |n| n.to_string()));
        }
        rec.extend([
            r.bregman_iter.to_string(),
            r.fpc_stages.to_string(),
            r.inner_iters.to_string(),
            sci(r.residual),
            r.support_size.to_string(),
            sci(r.b_tol),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let per_node = headers.iter().any(|h| h == "node_id");
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(DiagnosticRow {
            trial: parse_field(&rec, &headers, "trial", path)?,
            m: parse_field(&rec, &headers, "m", path)?,
            node: if per_node {
                Some(parse_field(&rec, &headers, "node_id", path)?)
            } else {
                None
            },
            bregman_iter: parse_field(&rec, &headers, "bregman_iter", path)?,
            fpc_stages: parse_field(&rec, &headers, "fpc_stage", path)?,
            inner_iters: parse_field(&rec, &headers, "inner_iters", path)?,
            residual: parse_field(&rec, &headers, "residual_V2", path)?,
            support_size: parse_field(&rec, &headers, "support_size", path)?,
            b_tol: parse_field(&rec, &headers, "b_tol", path)?,
        });
    }
    Ok(rows)
}

/// Trial average for one method and one sample count.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub m: usize,
    pub trials: usize,
    pub rel_err_mean: f64,
    pub rel_err_std: f64,
    pub not_converged: usize,
}

/// Averages results over trials; refuses inputs from different configs.
pub fn aggregate(results: &[RunResult]) -> Result<Vec<ReportRow>> {
    if let Some(first) = results.first() {
        if let Some(other) = results.iter().find(|r| r.config_id != first.config_id) {
            return Err(Error::MixedConfigs(first.config_id.clone(), other.config_id.clone()));
        }
    }
    let mut groups: BTreeMap<(Method, usize), Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.method, r.m)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((method, m), rows)| {
            let n = rows.len() as f64;
            ReportRow {
                method,
                m,
                trials: rows.len(),
                rel_err_mean: rows.iter().map(|r| r.rel_err_mean).sum::<f64>() / n,
                rel_err_std: rows.iter().map(|r| r.rel_err_std).sum::<f64>() / n,
                not_converged: rows.iter().filter(|r| !r.converged).count(),
            }
        })
        .collect())
}

pub fn report_csv_path(dir: &Path) -> PathBuf {
    dir.join("report.csv")
}

/// Reads result files, writes `report.csv` plus one whitespace table per
/// metric (`report_mean.dat`, `report_std.dat`). Timing is left out so
/// that reruns are byte-identical.
pub fn report(inputs: &[PathBuf], dir: &Path) -> Result<Vec<ReportRow>> {
    let mut results = Vec::new();
    for path in inputs {
        results.extend(read_results(path)?);
    }
    let rows = aggregate(&results)?;
    let config_id = results.first().map_or(String::new(), |r| r.config_id.clone());
    std::fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(report_csv_path(dir))?;
    w.write_record(["method", "m", "trials", "rel_err_mean", "rel_err_std", "not_converged", "config_id"])?;
    for r in &rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.m.to_string(),
            r.trials.to_string(),
            sci(r.rel_err_mean),
            sci(r.rel_err_std),
            r.not_converged.to_string(),
            config_id.clone(),
        ])?;
    }
    w.flush()?;

    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| rows.iter().any(|r| r.method == *m)).collect();
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    for (name, pick) in [("mean", 0usize), ("std", 1)] {
        let mut text = format!("# relative {name} error, config {config_id}\n# m");
        for method in &methods {
            text.push(' ');
            text.push_str(method.as_str());
        }
        text.push('\n');
        for &m in &ms {
            text.push_str(&m.to_string());
            for method in &methods {
                let v = rows
                    .iter()
                    .find(|r| r.method == *method && r.m == m)
                    .map_or(f64::NAN, |r| if pick == 0 { r.rel_err_mean } else { r.rel_err_std });
                text.push(' ');
                text.push_str(&sci(v));
            }
            text.push('\n');
        }
        std::fs::write(dir.join(format!("report_{name}.dat")), text)?;
    }
    Ok(rows)
}
