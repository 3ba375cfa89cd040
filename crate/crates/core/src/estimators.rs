//! Statistics of surrogates and samples, the least-squares reference, the
//! Bregman tolerance rule, and relative error metrics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::{Mesh, NodalField};
use crate::hilbert::{HilbertVec, Norm};
use crate::multiindex::IndexSet;
use crate::polychaos::{design_matrix, draw_samples, ParamSample};
use crate::scs::Problem;
use crate::snapshots;
use crate::coefficient::CoefficientModel;

/// Largest admissible condition number of the reference design matrix.
pub const MAX_REFERENCE_CONDITION: f64 = 1e8;

/// Mean field of a GPC expansion: the coefficient of the zero index.
pub fn gpc_mean(c: &HilbertVec) -> NodalField {
    c.coords().row(0).transpose()
}

/// Nodal standard deviation `sqrt(sum_{nu != 0} c_nu(x)^2)`.
pub fn gpc_std_field(c: &HilbertVec) -> NodalField {
    let k = c.nodes();
    DVector::from_fn(k, |node, _| {
        c.coords()
            .column(node)
            .iter()
            .skip(1)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    })
}

/// Sample mean and unbiased sample standard deviation, nodewise.
pub fn mc_estimate(snapshots: &DMatrix<f64>) -> Result<(NodalField, NodalField)> {
    let m = snapshots.nrows();
    if m < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: m });
    }
    let mean = DVector::from_fn(snapshots.ncols(), |k, _| snapshots.column(k).mean());
    let std = DVector::from_fn(snapshots.ncols(), |k, _| {
        let mu = mean[k];
        let ss: f64 = snapshots.column(k).iter().map(|v| (v - mu).powi(2)).sum();
        (ss / (m - 1) as f64).sqrt()
    });
    Ok((mean, std))
}

/// Least-squares coefficients for every column of `rhs` via a QR
/// factorization of `design`.
pub fn least_squares_fit(design: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n) = design.shape();
    if m < n {
        return Err(Error::TooFewSamples { needed: n, got: m });
    }
    if rhs.nrows() != m {
        return Err(Error::ShapeMismatch(format!("{} right-hand-side rows for {m} samples", rhs.nrows())));
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let sv = r.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_REFERENCE_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let qtb = qr.q().tr_mul(rhs);
    r.solve_upper_triangular(&qtb)
        .ok_or(Error::IllConditioned { condition })
}

/// Reference coefficients: dense least squares on `m_ref` fresh samples.
pub fn reference_oracle(
    set: &IndexSet,
    mesh: &Mesh,
    model: &CoefficientModel,
    m_ref: usize,
    seed: u64,
) -> Result<HilbertVec> {
    let needed = 3 * set.len();
    if m_ref < needed {
        return Err(Error::TooFewSamples { needed, got: m_ref });
    }
    let samples = draw_samples(set.dim(), m_ref, seed);
    let snaps = snapshots::solve_snapshots(mesh, model, &samples)?;
    fit_reference(set, &samples, &snaps, mesh)
}

/// Least-squares fit of given snapshots onto the basis of `set`.
pub fn fit_reference(set: &IndexSet, samples: &[ParamSample], snaps: &DMatrix<f64>, mesh: &Mesh) -> Result<HilbertVec> {
    let design = design_matrix(set, samples)?;
    let coeffs = least_squares_fit(&design, snaps)?;
    HilbertVec::new(coeffs, mesh.gram().clone())
}

/// `b_tol = 1.2 ||A c* - u||_{V,2}` in normalized units, floored at
/// `1e-12 ||u||_{V,2}`.
pub fn btol_rule(problem: &Problem, u: &HilbertVec, c_star: &HilbertVec) -> f64 {
    let raw = 1.2 * problem.residual(c_star, u);
    raw.max(1e-12 * u.mixed_norm(Norm::Two))
}

/// Relative H^1_0 errors of mean and standard deviation fields.
pub fn error_report(
    mesh: &Mesh,
    approx_mean: &NodalField,
    approx_std: &NodalField,
    ref_mean: &NodalField,
    ref_std: &NodalField,
) -> Result<(f64, f64)> {
    let rel = |approx: &NodalField, reference: &NodalField| -> Result<f64> {
        if approx.len() != reference.len() || reference.len() != mesh.num_dofs() {
            return Err(Error::ShapeMismatch(format!(
                "fields of length {} and {} on a {}-node mesh",
                approx.len(),
                reference.len(),
                mesh.num_dofs()
            )));
        }
        let denom = mesh.v_norm(reference);
        if denom == 0.0 {
            return Err(Error::ZeroReference);
        }
        Ok(mesh.v_norm(&(reference - approx)) / denom)
    };
    Ok((rel(approx_mean, ref_mean)?, rel(approx_std, ref_std)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::AffineCoefficient;
    use crate::polychaos::{sampling_matrix, tensor_basis_eval, SQRT3};
    use crate::quadrature::gauss_legendre;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh1d() -> Mesh {
        Mesh::build(1, 8).unwrap()
    }

    #[test]
    fn constant_expansion_has_zero_std() {
        let mesh = mesh1d();
        let mut c = DMatrix::zeros(4, mesh.num_dofs());
        c.row_mut(0).fill(2.0);
        let c = HilbertVec::new(c, mesh.gram().clone()).unwrap();
        assert_eq!(gpc_std_field(&c).amax(), 0.0);
        assert_eq!(gpc_mean(&c).amax(), 2.0);
    }

    #[test]
    fn single_fluctuation_mode() {
        let mesh = mesh1d();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = DMatrix::from_fn(2, mesh.num_dofs(), |_, _| rng.random_range(-1.0..1.0));
        let h = HilbertVec::new(c.clone(), mesh.gram().clone()).unwrap();
        let s = gpc_std_field(&h);
        for k in 0..mesh.num_dofs() {
            assert_eq!(s[k], c[(1, k)].abs());
        }
    }

    #[test]
    fn mc_two_point_formula() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let snaps = DMatrix::from_rows(&[v.transpose(), -v.transpose()]);
        let (mean, std) = mc_estimate(&snaps).unwrap();
        assert_eq!(mean.amax(), 0.0);
        for k in 0..3 {
            assert_abs_diff_eq!(std[k], 2f64.sqrt() * v[k].abs(), epsilon = 1e-15);
        }
        let same = DMatrix::from_rows(&[v.transpose(), v.transpose(), v.transpose()]);
        assert_eq!(mc_estimate(&same).unwrap().1.amax(), 0.0);
        assert!(matches!(mc_estimate(&DMatrix::zeros(1, 3)), Err(Error::TooFewSamples { .. })));
    }

    fn random_expansion(rng: &mut ChaCha8Rng, n: usize, mesh: &Mesh) -> HilbertVec {
        HilbertVec::new(
            DMatrix::from_fn(n, mesh.num_dofs(), |_, _| rng.random_range(-1.0..1.0)),
            mesh.gram().clone(),
        )
        .unwrap()
    }

    #[test]
    fn gpc_statistics_match_monte_carlo() {
        let mesh = Mesh::build(1, 4).unwrap();
        let set = IndexSet::total_degree(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_expansion(&mut rng, set.len(), &mesh);
        let samples = draw_samples(2, 100_000, 3);
        let psi = design_matrix(&set, &samples).unwrap();
        let values = &psi * c.coords();
        let (mc_mean, mc_std) = mc_estimate(&values).unwrap();
        let mean = gpc_mean(&c);
        let std = gpc_std_field(&c);
        let m = samples.len() as f64;
        for k in 0..mesh.num_dofs() {
            // 3 sigma: sd(mean) = std/sqrt(m); sd(std) is bounded by sqrt(kurtosis/4m) * std,
            // with Psi products up to degree 4 the kurtosis stays well below 25
            assert!((mc_mean[k] - mean[k]).abs() <= 3.0 * std[k] / m.sqrt());
            assert!((mc_std[k] - std[k]).abs() <= 3.0 * 2.5 * std[k] / m.sqrt());
        }
    }

    #[test]
    fn mc_std_converges_to_gpc_std() {
        let mesh = Mesh::build(1, 4).unwrap();
        let set = IndexSet::total_degree(3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_expansion(&mut rng, set.len(), &mesh);
        let exact = gpc_std_field(&c);
        let mut errs = Vec::new();
        for m in [100usize, 1600, 25_600] {
            // average over replicates to smooth the rate estimate
            let mut e = 0.0;
            for rep in 0..8 {
                let psi = design_matrix(&set, &draw_samples(3, m, 100 + rep)).unwrap();
                let (_, s) = mc_estimate(&(&psi * c.coords())).unwrap();
                e += (s - &exact).norm();
            }
            errs.push(e / 8.0);
        }
        // each 16x increase in m should cut the error by roughly 4
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 2.0 && ratio < 8.0, "ratio {ratio}");
        }
    }

    #[test]
    fn least_squares_recovers_planted_coefficients() {
        let mesh = mesh1d();
        let set = IndexSet::total_degree(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_expansion(&mut rng, set.len(), &mesh);
        let samples = draw_samples(3, 3 * set.len(), 6);
        let snaps = design_matrix(&set, &samples).unwrap() * c.coords();
        let fit = fit_reference(&set, &samples, &snaps, &mesh).unwrap();
        assert_abs_diff_eq!((fit.coords() - c.coords()).amax(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn gauss_points_interpolate() {
        let n = 5;
        let set = IndexSet::total_degree(1, n - 1).unwrap();
        let (x, _) = gauss_legendre(n);
        let samples: Vec<_> = x.iter().map(|&t| ParamSample::new(vec![SQRT3 * t]).unwrap()).collect();
        // data from a smooth non-polynomial function: exact interpolation at the nodes
        let f = |y: f64| (0.3 * y).exp();
        let rhs = DMatrix::from_fn(n, 1, |i, _| f(samples[i].as_slice()[0]));
        let coeffs = least_squares_fit(&design_matrix(&set, &samples).unwrap(), &rhs).unwrap();
        for s in &samples {
            let v: f64 = set
                .iter()
                .enumerate()
                .map(|(j, nu)| coeffs[(j, 0)] * tensor_basis_eval(nu, s).unwrap())
                .sum();
            assert_abs_diff_eq!(v, f(s.as_slice()[0]), epsilon = 1e-12);
        }
        // and the Gauss-weighted projection gives the same coefficients
        let (_, w) = gauss_legendre(n);
        for (j, nu) in set.iter().enumerate() {
            let proj: f64 = samples
                .iter()
                .zip(&w)
                .map(|(s, wt)| 0.5 * wt * f(s.as_slice()[0]) * tensor_basis_eval(nu, s).unwrap())
                .sum();
            assert_abs_diff_eq!(proj, coeffs[(j, 0)], epsilon = 1e-12);
        }
    }

    #[test]
    fn ill_conditioned_design_is_rejected() {
        let mut design = DMatrix::from_fn(10, 3, |i, j| ((i + 1) * (j + 1)) as f64);
        design[(0, 2)] += 1e-12;
        assert!(matches!(
            least_squares_fit(&design, &DMatrix::zeros(10, 1)),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn reference_requires_enough_samples() {
        let mesh = Mesh::build(2, 4).unwrap();
        let set = IndexSet::total_degree(3, 2).unwrap();
        let model = CoefficientModel::Affine(AffineCoefficient::new(3, 0.25).unwrap());
        assert!(matches!(
            reference_oracle(&set, &mesh, &model, 20, 1),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn reference_residual_shrinks_with_richer_basis() {
        let mesh = Mesh::build(2, 6).unwrap();
        let model = CoefficientModel::Affine(AffineCoefficient::new(8, 0.25).unwrap());
        let samples = draw_samples(8, 600, 7);
        let snaps = snapshots::solve_snapshots(&mesh, &model, &samples).unwrap();
        let mut residuals = Vec::new();
        for p in 1..=3 {
            let set = IndexSet::total_degree(8, p).unwrap();
            let c = fit_reference(&set, &samples, &snaps, &mesh).unwrap();
            let a = sampling_matrix(&set, &samples).unwrap();
            let u = HilbertVec::new(snaps.clone() / (600f64).sqrt(), mesh.gram().clone()).unwrap();
            let r = c.with_coords(&a.a * c.coords() - u.coords()).mixed_norm(Norm::Two);
            residuals.push(r);
        }
        assert!(residuals[1] < residuals[0] && residuals[2] < residuals[1], "{residuals:?}");
    }

    #[test]
    fn btol_cases() {
        let mesh = mesh1d();
        let set = IndexSet::total_degree(3, 2).unwrap();
        let samples = draw_samples(3, 8, 8);
        let a = sampling_matrix(&set, &samples).unwrap();
        let problem = Problem::new(&a, 1e-5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_expansion(&mut rng, set.len(), &mesh);
        let u = c.with_coords(&problem.matrix().a * c.coords());
        let floor = 1e-12 * u.mixed_norm(Norm::Two);
        assert_abs_diff_eq!(btol_rule(&problem, &u, &c), floor, epsilon = 1e-3 * floor);

        let tail = random_expansion(&mut rng, 8, &mesh);
        let noisy = u.add(&tail).unwrap();
        let noisier = u.add(&tail.scaled(2.0)).unwrap();
        let b1 = btol_rule(&problem, &noisy, &c);
        let b2 = btol_rule(&problem, &noisier, &c);
        assert_abs_diff_eq!(b2, 2.0 * b1, epsilon = 1e-12 * b2);
        assert_abs_diff_eq!(b1, 1.2 * tail.mixed_norm(Norm::Two), epsilon = 1e-12);
    }

    #[test]
    fn error_metrics() {
        let mesh = mesh1d();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let k = mesh.num_dofs();
        let mean = DVector::from_fn(k, |_, _| rng.random_range(0.5..1.0));
        let std = DVector::from_fn(k, |_, _| rng.random_range(0.1..0.2));
        assert_eq!(error_report(&mesh, &mean, &std, &mean, &std).unwrap(), (0.0, 0.0));
        let (e, s) = error_report(&mesh, &(&mean * 1.03), &std, &mean, &std).unwrap();
        assert_abs_diff_eq!(e, 0.03, epsilon = 1e-14);
        assert_eq!(s, 0.0);
        // scale invariance in the reference
        let skew = DVector::from_fn(k, |_, _| rng.random_range(0.0..1.0));
        let base = error_report(&mesh, &skew, &skew, &mean, &std).unwrap();
        let scaled = error_report(&mesh, &(&skew * 7.0), &(&skew * 7.0), &(&mean * 7.0), &(&std * 7.0)).unwrap();
        assert_abs_diff_eq!(base.0, scaled.0, epsilon = 1e-13);
        assert_abs_diff_eq!(base.1, scaled.1, epsilon = 1e-13);
        let zero = DVector::zeros(k);
        assert!(matches!(error_report(&mesh, &mean, &std, &zero, &std), Err(Error::ZeroReference)));
    }

    #[test]
    fn gpc_statistics_are_deterministic() {
        let mesh = mesh1d();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_expansion(&mut rng, 10, &mesh);
        assert_eq!(gpc_std_field(&c), gpc_std_field(&c));
        assert_eq!(gpc_mean(&c), gpc_mean(&c));
    }
}
