//! Tensorized orthonormal Legendre polynomials on `(-sqrt 3, sqrt 3)^d` and
//! the normalized sampling matrix `A[i][nu] = Psi_nu(y_i) / sqrt(m)`.

use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::multiindex::{IndexSet, MultiIndex};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Legendre polynomial of degree `k` scaled to be orthonormal against `dt/2`
/// on `[-1, 1]`.
pub fn legendre_1d(k: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return 1.0;
    }
    let mut cur = t;
    for n in 1..k {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * t * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    cur * ((2 * k + 1) as f64).sqrt()
}

/// Fills `out[k] = legendre_1d(k, t)` for `k = 0..out.len()`.
fn legendre_table(t: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let mut prev = 1.0;
    out[0] = 1.0;
    if n == 1 {
        return;
    }
    let mut cur = t;
    out[1] = t * 3f64.sqrt();
    for k in 1..n - 1 {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        out[k + 1] = cur * ((2 * k + 3) as f64).sqrt();
    }
}

/// A parameter point with every coordinate in `(-sqrt 3, sqrt 3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSample(Vec<f64>);

impl ParamSample {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(v.abs() < SQRT3)) {
            return Err(Error::ParameterDomain { index, value });
        }
        Ok(Self(y))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }
}

/// `Psi_nu(y) = prod_j Pbar_{nu_j}(y_j / sqrt 3)`.
pub fn tensor_basis_eval(nu: &MultiIndex, y: &ParamSample) -> Result<f64> {
    if nu.dim() != y.dim() {
        return Err(Error::LengthMismatch {
            expected: nu.dim(),
            got: y.dim(),
        });
    }
    Ok(nu
        .components()
        .iter()
        .zip(y.as_slice())
        .filter(|(&k, _)| k > 0)
        .map(|(&k, &yj)| legendre_1d(k as usize, yj / SQRT3))
        .product())
}

/// Evaluates every basis function of `set` at `y`, in set order.
pub fn basis_row(set: &IndexSet, y: &ParamSample) -> Result<Vec<f64>> {
    if set.dim() != y.dim() {
        return Err(Error::LengthMismatch {
            expected: set.dim(),
            got: y.dim(),
        });
    }
    let deg = set.order() as usize + 1;
    let mut table = vec![0.0; set.dim() * deg];
    for (j, &yj) in y.as_slice().iter().enumerate() {
        legendre_table(yj / SQRT3, &mut table[j * deg..(j + 1) * deg]);
    }
    Ok(set
        .iter()
        .map(|nu| {
            nu.components()
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| table[j * deg + k as usize])
                .product()
        })
        .collect())
}

/// Unnormalized design matrix `Psi_nu(y_i)` (rows = samples).
pub fn design_matrix(set: &IndexSet, samples: &[ParamSample]) -> Result<DMatrix<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut out = DMatrix::zeros(samples.len(), set.len());
    for (i, y) in samples.iter().enumerate() {
        let row = basis_row(set, y)?;
        for (c, v) in row.into_iter().enumerate() {
            out[(i, c)] = v;
        }
    }
    Ok(out)
}

/// Measurement matrix plus the spectral data filled in by the solver setup.
#[derive(Clone, Debug)]
pub struct MeasurementMatrix {
    pub a: DMatrix<f64>,
    /// Largest eigenvalue of `A^T A`.
    pub lambda_max: Option<f64>,
    /// Smallest eigenvalue of `A A^T`.
    pub lambda_min: Option<f64>,
    /// Whether `A` (and the data) have been divided by `sqrt(lambda_max)`.
    pub normalized: bool,
}

impl MeasurementMatrix {
    pub fn from_dense(a: DMatrix<f64>) -> Self {
        Self {
            a,
            lambda_max: None,
            lambda_min: None,
            normalized: false,
        }
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }
}

/// `A[i][nu] = Psi_nu(y_i) / sqrt(m)` with columns in index-set order.
pub fn sampling_matrix(set: &IndexSet, samples: &[ParamSample]) -> Result<MeasurementMatrix> {
    let mut a = design_matrix(set, samples)?;
    a /= (samples.len() as f64).sqrt();
    Ok(MeasurementMatrix::from_dense(a))
}

/// `sup_nu ||Psi_nu||_inf = max_nu prod_j sqrt(2 nu_j + 1)`.
pub fn sup_bound(set: &IndexSet) -> f64 {
    set.iter()
        .map(|nu| {
            nu.components()
                .iter()
                .map(|&k| ((2 * k + 1) as f64).sqrt())
                .product::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Draws `m` points uniformly from `(-sqrt 3, sqrt 3)^d`.
///
/// Draws are row-major from a stream seeded by `seed`, so the first `m'`
/// points for `m' < m` coincide with a direct draw of `m'` points.
pub fn draw_samples(d: usize, m: usize, seed: u64) -> Vec<ParamSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| {
            let y = (0..d)
                .map(|_| {
                    let u: f64 = rng.sample(Open01);
                    SQRT3 * (2.0 * u - 1.0)
                })
                .collect();
            ParamSample(y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_degree_values() {
        assert_eq!(legendre_1d(0, 0.3), 1.0);
        assert_abs_diff_eq!(legendre_1d(1, 1.0), 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(legendre_1d(2, 0.0), -(5f64.sqrt()) / 2.0, epsilon = 1e-15);
        // endpoint value is sqrt(2k+1)
        for k in 0..12 {
            assert_abs_diff_eq!(legendre_1d(k, 1.0), ((2 * k + 1) as f64).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn table_matches_scalar_evaluation() {
        let mut t = [0.0; 9];
        for &x in &[-1.0, -0.7, 0.0, 0.31, 1.0] {
            legendre_table(x, &mut t);
            for (k, v) in t.iter().enumerate() {
                assert_abs_diff_eq!(*v, legendre_1d(k, x), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn one_dimensional_quadrature_orthonormality() {
        let (x, w) = gauss_legendre(12);
        for j in 0..10 {
            for k in 0..10 {
                let g: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&t, &wt)| 0.5 * wt * legendre_1d(j, t) * legendre_1d(k, t))
                    .sum();
                assert_abs_diff_eq!(g, if j == k { 1.0 } else { 0.0 }, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn tensor_evaluation() {
        let y = ParamSample::new(vec![SQRT3 * 0.5, 0.2, -1.0]).unwrap();
        assert_eq!(tensor_basis_eval(&MultiIndex::zero(3), &y).unwrap(), 1.0);
        assert_abs_diff_eq!(
            tensor_basis_eval(&MultiIndex::unit(3, 0), &y).unwrap(),
            SQRT3 * 0.5,
            epsilon = 1e-15
        );
        assert!(tensor_basis_eval(&MultiIndex::zero(2), &y).is_err());
        assert!(matches!(
            ParamSample::new(vec![0.0, SQRT3]),
            Err(Error::ParameterDomain { index: 1, .. })
        ));
    }

    #[test]
    fn parity_symmetry() {
        let set = IndexSet::total_degree(3, 4).unwrap();
        let samples = draw_samples(3, 20, 11);
        for y in &samples {
            for nu in set.iter() {
                let sign = if nu.degree() % 2 == 0 { 1.0 } else { -1.0 };
                let a = tensor_basis_eval(nu, y).unwrap();
                let b = tensor_basis_eval(nu, &y.neg()).unwrap();
                assert_abs_diff_eq!(b, sign * a, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sampling_matrix_entries() {
        let set = IndexSet::total_degree(4, 3).unwrap();
        let samples = draw_samples(4, 17, 3);
        let a = sampling_matrix(&set, &samples).unwrap();
        assert_eq!((a.rows(), a.cols()), (17, 35));
        for (i, y) in samples.iter().enumerate() {
            for (c, nu) in set.iter().enumerate() {
                let direct = tensor_basis_eval(nu, y).unwrap() / 17f64.sqrt();
                assert_abs_diff_eq!(a.a[(i, c)], direct, epsilon = 1e-13);
            }
        }
        assert!(matches!(sampling_matrix(&set, &[]), Err(Error::EmptySamples)));
    }

    #[test]
    fn constant_column() {
        let set = IndexSet::total_degree(5, 0).unwrap();
        let a = sampling_matrix(&set, &draw_samples(5, 9, 0)).unwrap();
        assert!(a.a.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn gauss_points_give_diagonal_gram() {
        // d = 1, m = N Gauss points: weighted A^T A is exactly the identity
        let n = 6;
        let set = IndexSet::total_degree(1, n - 1).unwrap();
        let (x, w) = gauss_legendre(n);
        let samples: Vec<_> = x.iter().map(|&t| ParamSample::new(vec![SQRT3 * t]).unwrap()).collect();
        let psi = design_matrix(&set, &samples).unwrap();
        for j in 0..n {
            for k in 0..n {
                let g: f64 = (0..n).map(|i| 0.5 * w[i] * psi[(i, j)] * psi[(i, k)]).sum();
                assert_abs_diff_eq!(g, if j == k { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sup_bound_values() {
        assert_eq!(sup_bound(&IndexSet::total_degree(3, 0).unwrap()), 1.0);
        assert_abs_diff_eq!(sup_bound(&IndexSet::total_degree(2, 1).unwrap()), SQRT3, epsilon = 1e-15);
        assert_abs_diff_eq!(sup_bound(&IndexSet::total_degree(2, 2).unwrap()), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn sup_bound_matches_grid_search() {
        for (d, p) in [(1, 5), (2, 3), (3, 2)] {
            let set = IndexSet::total_degree(d, p).unwrap();
            let grid: Vec<f64> = (0..=40).map(|i| -1.0 + 2.0 * i as f64 / 40.0).collect();
            let mut best = 0.0f64;
            for nu in set.iter() {
                // max of a product of univariate factors is the product of maxima
                let m: f64 = nu
                    .components()
                    .iter()
                    .map(|&k| grid.iter().map(|&t| legendre_1d(k as usize, t).abs()).fold(0.0, f64::max))
                    .product();
                best = best.max(m);
            }
            assert_abs_diff_eq!(best, sup_bound(&set), epsilon = 1e-10);
        }
    }

    #[test]
    fn draws_are_prefix_stable_and_in_domain() {
        let big = draw_samples(4, 50, 7);
        let small = draw_samples(4, 20, 7);
        assert_eq!(&big[..20], &small[..]);
        assert!(big.iter().flat_map(|s| s.as_slice()).all(|v| v.abs() < SQRT3));
        assert_ne!(draw_samples(4, 5, 8), draw_samples(4, 5, 7));
    }
}
