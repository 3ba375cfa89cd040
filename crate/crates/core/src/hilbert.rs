//! Hilbert-valued coefficient vectors.
//!
//! A [`HilbertVec`] stores `N` coordinates, each a length-`K` array of nodal
//! values of an element of `V_h`, as the rows of an `N x K` matrix. Every
//! coordinate is measured in the norm `||z||_V = sqrt(z^T G z)` for a shared
//! Gram matrix `G`.

use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::polychaos::MeasurementMatrix;

pub type Gram = Arc<CsrMatrix<f64>>;

pub fn identity_gram(k: usize) -> Gram {
    Arc::new(CsrMatrix::identity(k))
}

/// Exponent of a mixed `(V, p)` norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    One,
    Two,
    Inf,
}

#[derive(Clone, Debug)]
pub struct HilbertVec {
    coords: DMatrix<f64>,
    gram: Gram,
}

impl HilbertVec {
    pub fn new(coords: DMatrix<f64>, gram: Gram) -> Result<Self> {
        if gram.nrows() != coords.ncols() || gram.ncols() != coords.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{} nodal values per coordinate but a {}x{} gram matrix",
                coords.ncols(),
                gram.nrows(),
                gram.ncols()
            )));
        }
        Ok(Self { coords, gram })
    }

    pub fn zeros(n: usize, gram: Gram) -> Self {
        let k = gram.nrows();
        Self {
            coords: DMatrix::zeros(n, k),
            gram,
        }
    }

    /// Number of coordinates.
    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    /// Nodal values per coordinate.
    pub fn nodes(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.coords
    }

    pub fn into_coords(self) -> DMatrix<f64> {
        self.coords
    }

    pub fn gram(&self) -> &Gram {
        &self.gram
    }

    /// Same gram, new coordinates.
    pub fn with_coords(&self, coords: DMatrix<f64>) -> Self {
        debug_assert_eq!(coords.ncols(), self.coords.ncols());
        Self {
            coords,
            gram: Arc::clone(&self.gram),
        }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.coords.shape() != other.coords.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.coords.shape(),
                other.coords.shape()
            )));
        }
        Ok(())
    }

    /// `Z G`: every coordinate multiplied by the (symmetric) gram matrix.
    fn gram_applied(&self) -> DMatrix<f64> {
        gram_apply(&self.gram, &self.coords)
    }

    /// `||z_nu||_V` for every coordinate.
    pub fn coord_norms(&self) -> Vec<f64> {
        let zg = self.gram_applied();
        (0..self.len())
            .map(|r| self.coords.row(r).dot(&zg.row(r)).max(0.0).sqrt())
            .collect()
    }

    pub fn mixed_norm(&self, p: Norm) -> f64 {
        mixed_norm_of(&self.coord_norms(), p)
    }

    /// `sum_nu <z_nu, z'_nu>_V`
    pub fn inner_product_v2(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.coords.dot(&gram_apply(&self.gram, &other.coords)))
    }

    /// Coordinates with `||z_nu||_V > threshold`, ascending.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.coord_norms()
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > threshold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Keeps the `s` coordinates of largest V-norm (earlier positions win
    /// ties) and returns the truncation with `sigma_s(z)_{V,p}`.
    pub fn best_s_term(&self, s: usize, p: Norm) -> (Self, f64) {
        let norms = self.coord_norms();
        let mut order: Vec<usize> = (0..norms.len()).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        let mut kept = DMatrix::zeros(self.len(), self.nodes());
        for &i in order.iter().take(s) {
            kept.row_mut(i).copy_from(&self.coords.row(i));
        }
        let tail: Vec<f64> = order.iter().skip(s).map(|&i| norms[i]).collect();
        (self.with_coords(kept), mixed_norm_of(&tail, p))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.with_coords(&self.coords - &other.coords))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.with_coords(&self.coords + &other.coords))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_coords(&self.coords * factor)
    }
}

pub fn mixed_norm_of(norms: &[f64], p: Norm) -> f64 {
    match p {
        Norm::One => norms.iter().sum(),
        Norm::Two => norms.iter().map(|n| n * n).sum::<f64>().sqrt(),
        Norm::Inf => norms.iter().copied().fold(0.0, f64::max),
    }
}

/// `Z G` for symmetric `G`, column by column.
pub fn gram_apply(gram: &CsrMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(z.nrows(), z.ncols());
    for (k, row) in gram.row_iter().enumerate() {
        let mut col = out.column_mut(k);
        for (&l, &v) in row.col_indices().iter().zip(row.values()) {
            col.axpy(v, &z.column(l), 1.0);
        }
    }
    out
}

/// `(Az)_i = sum_nu A[i][nu] z_nu`
pub fn apply_measurement(a: &MeasurementMatrix, z: &HilbertVec) -> Result<HilbertVec> {
    if a.cols() != z.len() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns, vector has {} coordinates",
            a.cols(),
            z.len()
        )));
    }
    Ok(z.with_coords(&a.a * &z.coords))
}

/// `(A^T r)_nu = sum_i A[i][nu] r_i`
pub fn adjoint_apply(a: &MeasurementMatrix, r: &HilbertVec) -> Result<HilbertVec> {
    if a.rows() != r.len() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} rows, vector has {} coordinates",
            a.rows(),
            r.len()
        )));
    }
    Ok(r.with_coords(a.a.tr_mul(&r.coords)))
}
