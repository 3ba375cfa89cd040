//! Point-wise compressed sensing: an independent scalar Bregman-FPC solve at
//! every interior mesh node, reassembled into a Hilbert-valued surrogate.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{identity_gram, Gram, HilbertVec};
use crate::scs::{bregman_solve, Diagnostics, Problem, SolverConfig};

#[derive(Clone, Debug)]
pub struct NodeDiagnostics {
    pub node: usize,
    pub diagnostics: Diagnostics,
}

/// Runs scalar recovery at every node.
///
/// `snapshots` holds the raw values `u_h(x_k, y_i)` (rows = samples); they
/// are scaled by `1/sqrt(m)` and by the problem's spectral normalization
/// before solving. `config.b_tol` is the global residual budget, split
/// evenly as `b_tol / sqrt(K)` per node.
pub fn pcs_solve(
    problem: &Problem,
    snapshots: &DMatrix<f64>,
    gram: Gram,
    config: &SolverConfig,
) -> Result<(HilbertVec, Vec<NodeDiagnostics>)> {
    let (m, k) = snapshots.shape();
    if m != problem.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{m} snapshots for a {}-row matrix",
            problem.rows()
        )));
    }
    if gram.nrows() != k {
        return Err(Error::ShapeMismatch(format!("{k} nodes but a {}-node gram", gram.nrows())));
    }
    let node_config = SolverConfig {
        b_tol: config.b_tol / (k as f64).sqrt(),
        ..config.clone()
    };
    let factor = problem.scale() / (m as f64).sqrt();
    let scalar = identity_gram(1);
    let results = (0..k)
        .into_par_iter()
        .map(|node| {
            let g = DMatrix::from_iterator(m, 1, snapshots.column(node).iter().map(|v| v * factor));
            let data = HilbertVec::new(g, scalar.clone())?;
            let (z, diagnostics) = bregman_solve(problem, &data, &node_config)?;
            Ok((z.into_coords(), NodeDiagnostics { node, diagnostics }))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut coords = DMatrix::zeros(problem.cols(), k);
    let mut diags = Vec::with_capacity(k);
    for (node, (col, d)) in results.into_iter().enumerate() {
        coords.column_mut(node).copy_from(&col.column(0));
        diags.push(d);
    }
    Ok((HilbertVec::new(coords, gram)?, diags))
}
