//! Bregman-regularized fixed-point continuation for the mixed `(V,1)`
//! basis-pursuit-denoising problem
//!
//! ```text
//! min ||z||_{V,1}  subject to  ||A z - u||_{V,2} <= b_tol
//! ```
//!
//! Each Bregman step solves `min ||z||_{V,1} + mu_bar/2 ||A z - u^k||^2_{V,2}`
//! by forward–backward iterations `x <- J_{tau/mu}(x - tau A^T(A x - u^k))`
//! over an increasing sequence of weights `mu_l = min(4^l mu_0, mu_bar)`.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{gram_apply, HilbertVec, Norm};
use crate::polychaos::MeasurementMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Forward step size, in `[1, 2)` for the normalized matrix.
    pub tau: f64,
    pub x_tol: f64,
    pub g_tol: f64,
    /// Controls `mu_bar = sqrt(N / xi) sqrt(lambda_max / lambda_min)`.
    pub xi: f64,
    /// Bregman stopping residual in `||.||_{V,2}`, in normalized units.
    pub b_tol: f64,
    pub max_inner: usize,
    pub max_fpc_stages: usize,
    pub max_bregman: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            x_tol: 1.0,
            g_tol: 0.1,
            xi: 1e-5,
            b_tol: f64::NAN,
            max_inner: 10_000,
            max_fpc_stages: 60,
            max_bregman: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1.0..2.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau must lie in [1, 2), got {}", self.tau)));
        }
        for (name, v) in [("x_tol", self.x_tol), ("g_tol", self.g_tol), ("xi", self.xi)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Spectral data of the normalized matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    /// `lambda_max(A^T A)` of the matrix as supplied.
    pub raw_lambda_max: f64,
    /// `lambda_max(A^T A)` after normalization (1 up to the power-iteration tolerance).
    pub lambda_max: f64,
    /// `lambda_min(A A^T)` after normalization.
    pub lambda_min: f64,
    pub mu_bar: f64,
}

/// Largest eigenvalue of `A^T A` by power iteration.
///
/// Starts from the all-ones vector (nudged if it is annihilated) and stops
/// when successive Rayleigh quotients agree to `rel_tol`.
pub fn power_iteration(a: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> f64 {
    let n = a.ncols();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.01 * (i % 7) as f64);
    v.normalize_mut();
    let mut lambda = 0.0;
    for it in 0..max_iter {
        let w = a.tr_mul(&(a * &v));
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if it > 0 && (next - lambda).abs() <= rel_tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    warn!("power iteration hit its cap of {max_iter} iterations");
    lambda
}

/// Smallest eigenvalue of `A A^T` by a dense symmetric eigensolve.
pub fn smallest_eigenvalue_aat(a: &DMatrix<f64>) -> f64 {
    let aat = a * a.transpose();
    aat.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// A normalized problem `(A, u)` ready for the Bregman-FPC iterations.
#[derive(Clone, Debug)]
pub struct Problem {
    a: MeasurementMatrix,
    ata: Option<DMatrix<f64>>,
    spectrum: Spectrum,
    /// Factor applied to `A` and to the data, `lambda_max^{-1/2}`.
    scale: f64,
}

impl Problem {
    /// Normalizes `A <- A / sqrt(lambda_max)` and computes `mu_bar`.
    pub fn new(a: &MeasurementMatrix, xi: f64) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::EmptySamples);
        }
        let raw = power_iteration(&a.a, 1e-10, 5000);
        if !(raw > 0.0) {
            return Err(Error::RankDeficient {
                lambda_min: 0.0,
                lambda_max: raw,
            });
        }
        let scale = raw.sqrt().recip();
        let normalized = &a.a * scale;
        let lambda_max = power_iteration(&normalized, 1e-10, 5000);
        let lambda_min = smallest_eigenvalue_aat(&normalized).max(0.0);
        if lambda_min <= 1e-14 * lambda_max {
            return Err(Error::RankDeficient { lambda_min, lambda_max });
        }
        let n = a.cols() as f64;
        let mu_bar = (n / xi).sqrt() * (lambda_max / lambda_min).sqrt();
        let (m, n) = normalized.shape();
        // A^T A pays off once it is cheaper than two products per iteration
        let ata = (n < 2 * m).then(|| normalized.tr_mul(&normalized));
        Ok(Self {
            a: MeasurementMatrix {
                a: normalized,
                lambda_max: Some(lambda_max),
                lambda_min: Some(lambda_min),
                normalized: true,
            },
            ata,
            spectrum: Spectrum {
                raw_lambda_max: raw,
                lambda_max,
                lambda_min,
                mu_bar,
            },
            scale,
        })
    }

    pub fn matrix(&self) -> &MeasurementMatrix {
        &self.a
    }

    pub fn spectrum(&self) -> Spectrum {
        self.spectrum
    }

    pub fn mu_bar(&self) -> f64 {
        self.spectrum.mu_bar
    }

    /// Factor `lambda_max^{-1/2}` that data must be multiplied by.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn normalize_data(&self, u: &HilbertVec) -> HilbertVec {
        u.scaled(self.scale)
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    fn check_data(&self, u: &HilbertVec) -> Result<()> {
        if u.len() != self.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} data rows for a {}-row matrix",
                u.len(),
                self.rows()
            )));
        }
        Ok(())
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a.a * x
    }

    // A^T(Ax - u) given atu = A^T u
    fn gradient(&self, x: &DMatrix<f64>, atu: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = match &self.ata {
            Some(ata) => ata * x,
            None => self.a.a.tr_mul(&(&self.a.a * x)),
        };
        g -= atu;
        g
    }

    /// `||A z - u||_{V,2}` for normalized data `u`.
    pub fn residual(&self, z: &HilbertVec, u: &HilbertVec) -> f64 {
        let r = self.apply(z.coords()) - u.coords();
        z.with_coords(r).mixed_norm(Norm::Two)
    }
}

/// Spectral setup: normalizes `A` and `u` and returns `mu_bar`.
pub fn spectral_setup(a: &MeasurementMatrix, u: &HilbertVec, xi: f64) -> Result<(Problem, HilbertVec)> {
    let problem = Problem::new(a, xi)?;
    problem.check_data(u)?;
    let u = problem.normalize_data(u);
    Ok((problem, u))
}

/// `G_tau(x) = x - tau A^T (A x - u)`.
pub fn forward_step(problem: &Problem, x: &HilbertVec, u: &HilbertVec, tau: f64) -> Result<HilbertVec> {
    problem.check_data(u)?;
    let atu = problem.a.a.tr_mul(u.coords());
    let g = problem.gradient(x.coords(), &atu);
    Ok(x.with_coords(x.coords() - g * tau))
}

/// Coordinatewise soft threshold `x_nu / ||x_nu||_V * max(||x_nu||_V - upsilon, 0)`.
pub fn shrink(x: &HilbertVec, upsilon: f64) -> HilbertVec {
    let norms = x.coord_norms();
    let mut out = x.coords().clone();
    shrink_rows(&mut out, &norms, upsilon);
    x.with_coords(out)
}

fn shrink_rows(coords: &mut DMatrix<f64>, norms: &[f64], upsilon: f64) {
    for (r, &n) in norms.iter().enumerate() {
        let factor = if n > upsilon { (n - upsilon) / n } else { 0.0 };
        if factor != 1.0 {
            coords.row_mut(r).scale_mut(factor);
        }
    }
}

fn row_norms(gram: &nalgebra_sparse::CsrMatrix<f64>, x: &DMatrix<f64>) -> Vec<f64> {
    let xg = gram_apply(gram, x);
    (0..x.nrows()).map(|r| x.row(r).dot(&xg.row(r)).max(0.0).sqrt()).collect()
}

fn frob_v(gram: &nalgebra_sparse::CsrMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    x.dot(&gram_apply(gram, x)).max(0.0).sqrt()
}

/// Warm start for an FPC solve.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub x: HilbertVec,
    /// `mu_0` is never taken below this value.
    pub mu_floor: f64,
}

#[derive(Clone, Debug)]
pub struct FpcOutcome {
    pub x: HilbertVec,
    pub stages: usize,
    pub inner_iters: usize,
    pub final_mu: f64,
    pub converged: bool,
}

/// Fixed-point continuation for `min ||x||_{V,1} + mu_bar/2 ||A x - u||^2_{V,2}`.
pub fn fpc_solve(
    problem: &Problem,
    u: &HilbertVec,
    mu_bar: f64,
    config: &SolverConfig,
    warm: Option<&WarmStart>,
) -> Result<FpcOutcome> {
    problem.check_data(u)?;
    let gram = u.gram().clone();
    let tau = config.tau;
    let atu = problem.a.a.tr_mul(u.coords());

    let (mut x, mu0) = match warm {
        None => {
            let x0 = &atu * tau;
            let top = row_norms(&gram, &x0).into_iter().fold(0.0, f64::max);
            if top == 0.0 {
                return Ok(FpcOutcome {
                    x: HilbertVec::zeros(problem.cols(), gram),
                    stages: 0,
                    inner_iters: 0,
                    final_mu: mu_bar,
                    converged: true,
                });
            }
            (x0, tau / (0.99 * top))
        }
        Some(w) => {
            let x0 = w.x.coords().clone();
            let g = problem.gradient(&x0, &atu);
            let step = &x0 - g * tau;
            let top = row_norms(&gram, &step).into_iter().fold(0.0, f64::max);
            let mu0 = if top > 0.0 { tau / (0.99 * top) } else { mu_bar };
            (x0, mu0.max(w.mu_floor))
        }
    };
    let mu0 = mu0.min(mu_bar);

    let mut inner = 0usize;
    let mut stage = 0usize;
    let mut mu = mu0;
    while stage < config.max_fpc_stages.max(1) {
        mu = (4f64.powi(stage as i32) * mu0).min(mu_bar);
        let upsilon = tau / mu;
        let x_thresh = (mu_bar / mu).sqrt() * config.x_tol;
        let mut prev: Option<DMatrix<f64>> = None;
        loop {
            let grad = problem.gradient(&x, &atu);
            if let Some(p) = &prev {
                let diff = frob_v(&gram, &(&x - p));
                let rel = diff / frob_v(&gram, p).max(1.0);
                let gmax = row_norms(&gram, &grad).into_iter().fold(0.0, f64::max);
                if rel < x_thresh && mu * gmax - 1.0 < config.g_tol {
                    break;
                }
            }
            if inner >= config.max_inner {
                debug!("fpc: inner iteration cap reached at stage {stage} (mu = {mu:e})");
                return Ok(FpcOutcome {
                    x: HilbertVec::new(x, gram)?,
                    stages: stage + 1,
                    inner_iters: inner,
                    final_mu: mu,
                    converged: false,
                });
            }
            let mut next = &x - grad * tau;
            let norms = row_norms(&gram, &next);
            shrink_rows(&mut next, &norms, upsilon);
            prev = Some(std::mem::replace(&mut x, next));
            inner += 1;
        }
        stage += 1;
        if mu >= mu_bar {
            return Ok(FpcOutcome {
                x: HilbertVec::new(x, gram)?,
                stages: stage,
                inner_iters: inner,
                final_mu: mu,
                converged: true,
            });
        }
    }
    Ok(FpcOutcome {
        x: HilbertVec::new(x, gram)?,
        stages: stage,
        inner_iters: inner,
        final_mu: mu,
        converged: false,
    })
}

/// One Bregman iteration's record.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub bregman_iter: usize,
    pub fpc_stages: usize,
    pub inner_iters: usize,
    pub residual: f64,
    pub support_size: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub records: Vec<IterationRecord>,
    pub total_inner: usize,
    pub b_tol: f64,
    pub converged: bool,
    /// Set when some FPC subproblem stopped on an iteration cap.
    pub fpc_capped: bool,
}

impl Diagnostics {
    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }
}

/// Bregman iterations on normalized data `u`:
/// `u^{k+1} = u + (u^k - A z^k)`, `z^{k+1} = FPC(u^{k+1})`, until
/// `||A z^k - u||_{V,2} < b_tol`.
///
/// When the iteration cap is hit the iterate with smallest residual is
/// returned and `converged` is false.
pub fn bregman_solve(problem: &Problem, u: &HilbertVec, config: &SolverConfig) -> Result<(HilbertVec, Diagnostics)> {
    config.validate()?;
    problem.check_data(u)?;
    if !(config.b_tol > 0.0) {
        return Err(Error::Config(format!("b_tol must be positive, got {}", config.b_tol)));
    }
    let gram = u.gram().clone();
    let mu_bar = problem.mu_bar();
    let mut diag = Diagnostics {
        b_tol: config.b_tol,
        ..Diagnostics::default()
    };

    let mut z = HilbertVec::zeros(problem.cols(), gram.clone());
    let initial = u.mixed_norm(Norm::Two);
    if initial <= config.b_tol {
        diag.converged = true;
        diag.records.push(IterationRecord {
            bregman_iter: 0,
            fpc_stages: 0,
            inner_iters: 0,
            residual: initial,
            support_size: 0,
        });
        return Ok((z, diag));
    }

    let mut uk = DMatrix::zeros(u.len(), u.nodes());
    let mut az = DMatrix::zeros(u.len(), u.nodes());
    let mut warm: Option<WarmStart> = None;
    let mut best: Option<(f64, HilbertVec)> = None;
    for k in 1..=config.max_bregman {
        uk = u.coords() + (&uk - &az);
        let data = u.with_coords(uk.clone());
        let out = fpc_solve(problem, &data, mu_bar, config, warm.as_ref())?;
        diag.fpc_capped |= !out.converged;
        diag.total_inner += out.inner_iters;
        z = out.x;
        az = problem.apply(z.coords());
        let residual = z.with_coords(&az - u.coords()).mixed_norm(Norm::Two);
        if let Some(prev) = diag.records.last() {
            if residual > prev.residual {
                debug!("bregman residual increased: {:e} -> {:e}", prev.residual, residual);
            }
        }
        diag.records.push(IterationRecord {
            bregman_iter: k,
            fpc_stages: out.stages,
            inner_iters: out.inner_iters,
            residual,
            support_size: z.support(0.0).len(),
        });
        if residual < config.b_tol {
            diag.converged = true;
            return Ok((z, diag));
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, z.clone()));
        }
        warm = Some(WarmStart {
            x: z.clone(),
            mu_floor: out.final_mu,
        });
    }
    debug!(
        "bregman iterations stopped at the cap of {} (residual {:e}, b_tol {:e})",
        config.max_bregman,
        diag.final_residual().unwrap_or(f64::NAN),
        config.b_tol
    );
    let z = best.map_or(z, |(_, z)| z);
    Ok((z, diag))
}
