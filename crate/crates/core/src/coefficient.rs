//! Parameterized diffusion coefficients.
//!
//! The affine field is
//!
//! ```text
//! a(x, y) = 10 + y_1 (sqrt(pi) L / 2)^(1/2) + sum_{n=2}^d zeta_n phi_n(x) y_n
//! zeta_n  = (sqrt(pi) L)^(1/2) exp(-(floor(n/2) pi L)^2 / 8)
//! phi_n   = sin(floor(n/2) pi x_1 / L_p)   (n even)
//!           cos(floor(n/2) pi x_1 / L_p)   (n odd)
//! ```
//!
//! with `L_p = max(1, 2 L_c)` and `L = L_c / L_p`. The log variant is
//! `log(a - 0.5)`, admissible only where `a > 1.5`.

use std::f64::consts::PI;

use nalgebra_sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::fem::{FemSystem, Mesh};
use crate::polychaos::ParamSample;

pub const OFFSET: f64 = 10.0;
/// Smallest affine value for which the log coefficient stays positive.
pub const LOG_ADMISSIBLE: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct AffineCoefficient {
    d: usize,
    correlation_length: f64,
    lp: f64,
    l: f64,
    // amplitudes[0] multiplies y_1; amplitudes[i] = zeta_{i+1}
    amplitudes: Vec<f64>,
}

impl AffineCoefficient {
    pub fn new(d: usize, correlation_length: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("coefficient dimension must be positive".into()));
        }
        if !(correlation_length > 0.0 && correlation_length.is_finite()) {
            return Err(Error::Config(format!(
                "correlation length must be positive, got {correlation_length}"
            )));
        }
        let lp = f64::max(1.0, 2.0 * correlation_length);
        let l = correlation_length / lp;
        let mut amplitudes = Vec::with_capacity(d);
        amplitudes.push((PI.sqrt() * l / 2.0).sqrt());
        for n in 2..=d {
            let k = (n / 2) as f64;
            amplitudes.push((PI.sqrt() * l).sqrt() * (-(k * PI * l).powi(2) / 8.0).exp());
        }
        Ok(Self {
            d,
            correlation_length,
            lp,
            l,
            amplitudes,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn correlation_length(&self) -> f64 {
        self.correlation_length
    }

    /// `L_p = max(1, 2 L_c)`
    pub fn lp(&self) -> f64 {
        self.lp
    }

    /// `L = L_c / L_p`
    pub fn l(&self) -> f64 {
        self.l
    }

    /// Amplitude multiplying `y_n`, `n` one-based.
    pub fn amplitude(&self, n: usize) -> f64 {
        self.amplitudes[n - 1]
    }

    /// Spatial mode multiplying `y_n` (one-based); 1 for `n = 1`.
    pub fn mode(&self, n: usize, x1: f64) -> f64 {
        if n == 1 {
            return 1.0;
        }
        let arg = (n / 2) as f64 * PI * x1 / self.lp;
        if n % 2 == 0 {
            arg.sin()
        } else {
            arg.cos()
        }
    }

    pub fn eval_affine(&self, x: &[f64; 2], y: &ParamSample) -> f64 {
        debug_assert_eq!(y.dim(), self.d);
        OFFSET
            + y.as_slice()
                .iter()
                .enumerate()
                .map(|(i, &yi)| self.amplitudes[i] * self.mode(i + 1, x[0]) * yi)
                .sum::<f64>()
    }

    pub fn eval_log(&self, x: &[f64; 2], y: &ParamSample) -> Result<f64> {
        log_transform(self.eval_affine(x, y))
    }

    /// Precomputes `S(y) = S_0 + sum_i y_i S_i` on `mesh`.
    pub fn affine_split(&self, mesh: &Mesh) -> AffineSplit {
        let centroids = mesh.centroids();
        let base = mesh.stiffness_from_element_values(&vec![OFFSET; centroids.len()]);
        let terms = (1..=self.d)
            .map(|n| {
                let vals: Vec<f64> = centroids
                    .iter()
                    .map(|c| self.amplitude(n) * self.mode(n, c[0]))
                    .collect();
                mesh.stiffness_from_element_values(&vals)
            })
            .collect();
        AffineSplit {
            base,
            terms,
            load: mesh.load().clone(),
        }
    }
}

/// `log(a - 0.5)`, rejecting `a <= 1.5`.
pub fn log_transform(a: f64) -> Result<f64> {
    if !(a > LOG_ADMISSIBLE) {
        return Err(Error::Positivity {
            value: a,
            sample: None,
        });
    }
    Ok((a - 0.5).ln())
}

/// Which transform of the affine field drives the PDE.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientModel {
    Affine(AffineCoefficient),
    Log(AffineCoefficient),
}

impl CoefficientModel {
    pub fn field(&self) -> &AffineCoefficient {
        match self {
            Self::Affine(c) | Self::Log(c) => c,
        }
    }

    pub fn eval(&self, x: &[f64; 2], y: &ParamSample) -> Result<f64> {
        match self {
            Self::Affine(c) => Ok(c.eval_affine(x, y)),
            Self::Log(c) => c.eval_log(x, y),
        }
    }

    /// Smallest admissible value of the underlying affine field.
    pub fn threshold(&self) -> f64 {
        match self {
            Self::Affine(_) => 0.0,
            Self::Log(_) => LOG_ADMISSIBLE,
        }
    }

    pub fn affine_split(&self, mesh: &Mesh) -> Result<AffineSplit> {
        match self {
            Self::Affine(c) => Ok(c.affine_split(mesh)),
            Self::Log(_) => Err(Error::UnsupportedModel(
                "affine splitting requires the affine coefficient",
            )),
        }
    }

    /// Assembles the FEM system at `y`, naming `sample` on positivity failure.
    pub fn assemble(&self, mesh: &Mesh, y: &ParamSample, sample: usize) -> Result<FemSystem> {
        let values = mesh
            .centroids()
            .iter()
            .map(|c| {
                let a = self.field().eval_affine(c, y);
                let ok = match self {
                    Self::Affine(_) => a > 0.0,
                    Self::Log(_) => a > LOG_ADMISSIBLE,
                };
                if !ok {
                    return Err(Error::Positivity {
                        value: a,
                        sample: Some(sample),
                    });
                }
                Ok(match self {
                    Self::Affine(_) => a,
                    Self::Log(_) => log_transform(a)?,
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(FemSystem {
            stiffness: mesh.stiffness_from_element_values(&values),
            load: mesh.load().clone(),
        })
    }
}

/// Per-variable stiffness pieces of the affine coefficient.
#[derive(Clone, Debug)]
pub struct AffineSplit {
    pub base: CsrMatrix<f64>,
    pub terms: Vec<CsrMatrix<f64>>,
    load: crate::fem::NodalField,
}

impl AffineSplit {
    pub fn stiffness(&self, y: &ParamSample) -> CsrMatrix<f64> {
        let mut values = self.base.values().to_vec();
        for (term, &yi) in self.terms.iter().zip(y.as_slice()) {
            for (v, t) in values.iter_mut().zip(term.values()) {
                *v += yi * t;
            }
        }
        CsrMatrix::try_from_pattern_and_values(self.base.pattern().clone(), values)
            .expect("shared pattern")
    }

    pub fn system(&self, y: &ParamSample) -> FemSystem {
        FemSystem {
            stiffness: self.stiffness(y),
            load: self.load.clone(),
        }
    }
}

/// Minimum of the affine field over all element centroids and samples,
/// with the index of the sample attaining it.
pub fn positivity_scan(coef: &AffineCoefficient, mesh: &Mesh, samples: &[ParamSample]) -> (f64, Option<usize>) {
    let centroids = mesh.centroids();
    let mut best = (f64::INFINITY, None);
    for (i, y) in samples.iter().enumerate() {
        for c in &centroids {
            let a = coef.eval_affine(c, y);
            if a < best.0 {
                best = (a, Some(i));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::to_dense;
    use crate::polychaos::{draw_samples, SQRT3};
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants_for_quarter_correlation_length() {
        let c = AffineCoefficient::new(5, 0.25).unwrap();
        assert_eq!(c.lp(), 1.0);
        assert_eq!(c.l(), 0.25);
        // direct evaluation of the defining formulas
        let a1 = (PI.sqrt() * 0.25 / 2.0).sqrt();
        assert_abs_diff_eq!(c.amplitude(1), a1, epsilon = 1e-15);
        assert_abs_diff_eq!(c.amplitude(1), 0.470_698_1, epsilon = 1e-7);
        let z2 = (PI.sqrt() / 4.0).sqrt() * (-(PI / 4.0).powi(2) / 8.0).exp();
        assert_abs_diff_eq!(c.amplitude(2), z2, epsilon = 1e-15);
        assert_abs_diff_eq!(c.amplitude(2), 0.616_269_4, epsilon = 1e-7);
        assert_abs_diff_eq!(c.mode(2, 0.3), (PI * 0.3).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.mode(3, 0.3), (PI * 0.3).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.mode(5, 0.3), (2.0 * PI * 0.3).cos(), epsilon = 1e-15);

        let wide = AffineCoefficient::new(3, 0.75).unwrap();
        assert_eq!(wide.lp(), 1.5);
        assert_abs_diff_eq!(wide.l(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_parameter_gives_offset() {
        let c = AffineCoefficient::new(9, 0.125).unwrap();
        let y = ParamSample::zeros(9);
        assert_eq!(c.eval_affine(&[0.3, 0.7], &y), 10.0);
        assert_abs_diff_eq!(c.eval_log(&[0.3, 0.7], &y).unwrap(), 9.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(9.5f64.ln(), 2.251_291_8, epsilon = 1e-7);
    }

    #[test]
    fn log_admissibility_boundary() {
        assert!(matches!(log_transform(1.5), Err(Error::Positivity { .. })));
        assert!(log_transform(1.0).is_err());
        assert_abs_diff_eq!(log_transform(1.5 + 1e-9).unwrap(), (1.0f64 + 1e-9).ln(), epsilon = 1e-15);
    }

    #[test]
    fn log_is_composition_with_affine() {
        let c = AffineCoefficient::new(6, 0.25).unwrap();
        for y in draw_samples(6, 20, 1) {
            for x in [[0.1, 0.2], [0.77, 0.5]] {
                assert_abs_diff_eq!(
                    c.eval_log(&x, &y).unwrap(),
                    (c.eval_affine(&x, &y) - 0.5).ln(),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn amplitude_pairs_and_decay() {
        let c = AffineCoefficient::new(40, 0.125).unwrap();
        let pil = PI * c.l();
        for n in 2..40 {
            if n / 2 == (n + 1) / 2 {
                assert_eq!(c.amplitude(n), c.amplitude(n + 1));
            }
            let k = (n / 2) as f64;
            let bound = c.amplitude(2) * (-((k * k - 1.0) * pil * pil) / 8.0).exp();
            assert!(c.amplitude(n) <= bound * (1.0 + 1e-14));
        }
        for k in 1..19 {
            assert!(c.amplitude(2 * k + 2) < c.amplitude(2 * k));
        }
    }

    #[test]
    fn linear_in_parameters() {
        let c = AffineCoefficient::new(7, 0.25).unwrap();
        let s = draw_samples(7, 2, 4);
        let (alpha, beta) = (0.3, 0.45);
        let comb: Vec<f64> = s[0]
            .as_slice()
            .iter()
            .zip(s[1].as_slice())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let yc = ParamSample::new(comb).unwrap();
        let x = [0.37, 0.1];
        let lhs = c.eval_affine(&x, &yc);
        let rhs = alpha * c.eval_affine(&x, &s[0]) + beta * c.eval_affine(&x, &s[1]) - (alpha + beta - 1.0) * 10.0;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
    }

    #[test]
    fn affine_split_matches_direct_assembly() {
        let mesh = Mesh::build(2, 8).unwrap();
        let c = AffineCoefficient::new(6, 0.25).unwrap();
        let split = c.affine_split(&mesh);
        let model = CoefficientModel::Affine(c.clone());

        let s0 = to_dense(&split.base);
        let kv = to_dense(mesh.gram());
        assert_abs_diff_eq!((s0 - kv * 10.0).amax(), 0.0, epsilon = 1e-12);

        let mut unit = vec![0.0; 6];
        unit[0] = 1.0;
        let mut samples = vec![ParamSample::new(unit).unwrap()];
        samples.extend(draw_samples(6, 5, 2));
        for (i, y) in samples.iter().enumerate() {
            let direct = to_dense(&model.assemble(&mesh, y, i).unwrap().stiffness);
            let fast = to_dense(&split.stiffness(y));
            assert_abs_diff_eq!((direct - fast).amax(), 0.0, epsilon = 1e-12);
        }

        let log = CoefficientModel::Log(c);
        assert!(matches!(log.affine_split(&mesh), Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn positivity_scans() {
        let mesh = Mesh::build(2, 8).unwrap();
        let c = AffineCoefficient::new(20, 0.25).unwrap();
        let (min, _) = positivity_scan(&c, &mesh, &[ParamSample::zeros(20)]);
        assert_abs_diff_eq!(min, 10.0, epsilon = 1e-14);

        let (min, idx) = positivity_scan(&c, &mesh, &draw_samples(20, 1000, 3));
        assert!(min > 0.0 && idx.is_some());

        // corners of the parameter box against the triangle-inequality bound
        let total: f64 = (1..=20).map(|n| c.amplitude(n)).sum();
        let edge = SQRT3 * (1.0 - 1e-12);
        let corners: Vec<ParamSample> = (0..64u64)
            .map(|bits| {
                let y = (0..20)
                    .map(|j| if (bits >> (j % 6)) & 1 == 1 { edge } else { -edge })
                    .collect();
                ParamSample::new(y).unwrap()
            })
            .collect();
        let (min, _) = positivity_scan(&c, &mesh, &corners);
        assert!(min >= 10.0 - SQRT3 * total);
    }
}
