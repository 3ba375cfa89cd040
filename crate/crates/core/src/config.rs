//! Plain-text `key = value` experiment configuration.
//!
//! Lines starting with `#` are comments. Unknown or repeated keys are
//! rejected so that a typo never silently falls back to a default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scs::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Planted sparse GPC coefficients; the planted vector is the reference.
    Synthetic,
    Affine,
    Log,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Synthetic => "synthetic",
            Mode::Affine => "affine",
            Mode::Log => "log",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Mode::Synthetic),
            "affine" => Ok(Mode::Affine),
            "log" => Ok(Mode::Log),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub d: usize,
    pub p: usize,
    pub lc: f64,
    pub mesh_n: usize,
    pub subdivisions: usize,
    pub trials: usize,
    pub seed0: u64,
    pub schedule_k_max: usize,
    /// Reference sample count; `None` means `max(3N, 2000)`.
    pub m_ref: Option<usize>,
    /// Number of planted nonzero coordinates (synthetic mode).
    pub sparsity: usize,
    /// Relative size of the dense tail added to the planted coefficients.
    pub noise: f64,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Affine,
            d: 20,
            p: 2,
            lc: 0.25,
            mesh_n: 2,
            subdivisions: 16,
            trials: 24,
            seed0: 1,
            schedule_k_max: 7,
            m_ref: None,
            sparsity: 4,
            noise: 0.0,
            solver: SolverConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "mode",
    "d",
    "p",
    "Lc",
    "mesh_n",
    "subdivisions",
    "trials",
    "seed0",
    "schedule_k_max",
    "m_ref",
    "sparsity",
    "noise",
    "tau",
    "x_tol",
    "g_tol",
    "xi",
    "max_inner",
    "max_fpc_stages",
    "max_bregman",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }

        let mut cfg = Self::default();
        for (key, value) in &entries {
            let v = value.as_str();
            match key.as_str() {
                "mode" => cfg.mode = v.parse()?,
                "d" => cfg.d = parse_value(key, v)?,
                "p" => cfg.p = parse_value(key, v)?,
                "Lc" => cfg.lc = parse_value(key, v)?,
                "mesh_n" => cfg.mesh_n = parse_value(key, v)?,
                "subdivisions" => cfg.subdivisions = parse_value(key, v)?,
                "trials" => cfg.trials = parse_value(key, v)?,
                "seed0" => cfg.seed0 = parse_value(key, v)?,
                "schedule_k_max" => cfg.schedule_k_max = parse_value(key, v)?,
                "m_ref" => cfg.m_ref = Some(parse_value(key, v)?),
                "sparsity" => cfg.sparsity = parse_value(key, v)?,
                "noise" => cfg.noise = parse_value(key, v)?,
                "tau" => cfg.solver.tau = parse_value(key, v)?,
                "x_tol" => cfg.solver.x_tol = parse_value(key, v)?,
                "g_tol" => cfg.solver.g_tol = parse_value(key, v)?,
                "xi" => cfg.solver.xi = parse_value(key, v)?,
                "max_inner" => cfg.solver.max_inner = parse_value(key, v)?,
                "max_fpc_stages" => cfg.solver.max_fpc_stages = parse_value(key, v)?,
                "max_bregman" => cfg.solver.max_bregman = parse_value(key, v)?,
                _ => unreachable!(),
            }
        }
        if !entries.contains_key("schedule_k_max") && cfg.mode == Mode::Log {
            cfg.schedule_k_max = 4;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if !(self.mesh_n == 1 || self.mesh_n == 2) {
            return bad(format!("mesh_n must be 1 or 2, got {}", self.mesh_n));
        }
        if self.subdivisions < 2 {
            return bad(format!("subdivisions must be at least 2, got {}", self.subdivisions));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if !(1..=8).contains(&self.schedule_k_max) {
            return bad(format!("schedule_k_max must lie in 1..=8, got {}", self.schedule_k_max));
        }
        if !(self.lc > 0.0 && self.lc.is_finite()) {
            return bad(format!("Lc must be positive, got {}", self.lc));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be non-negative, got {}", self.noise));
        }
        if self.mode == Mode::Synthetic && self.sparsity == 0 {
            return bad("sparsity must be positive".into());
        }
        crate::multiindex::total_degree_cardinality(self.d, self.p)
            .ok_or(Error::CardinalityOverflow { d: self.d, p: self.p })?;
        self.solver.validate()
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn canonical(&self) -> String {
        let s = &self.solver;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("mode", self.mode.as_str().into());
        put("d", self.d.to_string());
        put("p", self.p.to_string());
        put("Lc", format!("{:?}", self.lc));
        put("mesh_n", self.mesh_n.to_string());
        put("subdivisions", self.subdivisions.to_string());
        put("trials", self.trials.to_string());
        put("seed0", self.seed0.to_string());
        put("schedule_k_max", self.schedule_k_max.to_string());
        if let Some(m) = self.m_ref {
            put("m_ref", m.to_string());
        }
        put("sparsity", self.sparsity.to_string());
        put("noise", format!("{:?}", self.noise));
        put("tau", format!("{:?}", s.tau));
        put("x_tol", format!("{:?}", s.x_tol));
        put("g_tol", format!("{:?}", s.g_tol));
        put("xi", format!("{:?}", s.xi));
        put("max_inner", s.max_inner.to_string());
        put("max_fpc_stages", s.max_fpc_stages.to_string());
        put("max_bregman", s.max_bregman.to_string());
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical form.
    pub fn config_id(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Basis size `N = binom(d + p, p)`.
    pub fn basis_size(&self) -> usize {
        crate::multiindex::total_degree_cardinality(self.d, self.p).unwrap_or(u64::MAX) as usize
    }

    /// Sample counts `m_k = ceil(k N / 8)` for `k = 1..=schedule_k_max`.
    pub fn schedule(&self) -> Vec<usize> {
        let n = self.basis_size();
        (1..=self.schedule_k_max).map(|k| (k * n).div_ceil(8)).collect()
    }

    pub fn reference_samples(&self) -> usize {
        self.m_ref.unwrap_or_else(|| (3 * self.basis_size()).max(2000))
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed0.wrapping_add(trial as u64)
    }
}
