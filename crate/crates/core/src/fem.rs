//! Piecewise-linear finite elements for `-div(a grad u) = 1` with homogeneous
//! Dirichlet data on `(0,1)` or `(0,1)^2`.
//!
//! Squares of the structured 2D grid are split along the `(i,j)-(i+1,j+1)`
//! diagonal. Only interior nodes carry unknowns.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::pattern::SparsityPattern;
use nalgebra_sparse::CsrMatrix;

use crate::error::{Error, Result};

/// Nodal values at the `K` interior nodes.
pub type NodalField = DVector<f64>;

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    subdivisions: usize,
    coords: Vec<[f64; 2]>,
    elements: Vec<Vec<usize>>,
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
    pattern: Arc<SparsityPattern>,
    // (slot in CSR values, unit-coefficient local stiffness entry) per element
    contributions: Vec<Vec<(usize, f64)>>,
    load: NodalField,
    gram: Arc<CsrMatrix<f64>>,
}

impl Mesh {
    /// Uniform mesh of `(0,1)^n` with `subdivisions` cells per side.
    pub fn build(dim: usize, subdivisions: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Config(format!("mesh dimension must be 1 or 2, got {dim}")));
        }
        if subdivisions < 2 {
            return Err(Error::Config(format!(
                "at least 2 subdivisions required, got {subdivisions}"
            )));
        }
        let s = subdivisions;
        let h = 1.0 / s as f64;
        let (coords, elements, boundary): (Vec<[f64; 2]>, Vec<Vec<usize>>, Vec<bool>) = if dim == 1 {
            let coords = (0..=s).map(|i| [i as f64 * h, 0.0]).collect();
            let elements = (0..s).map(|i| vec![i, i + 1]).collect();
            let boundary = (0..=s).map(|i| i == 0 || i == s).collect();
            (coords, elements, boundary)
        } else {
            let id = |i: usize, j: usize| j * (s + 1) + i;
            let mut coords = Vec::with_capacity((s + 1) * (s + 1));
            let mut boundary = Vec::with_capacity((s + 1) * (s + 1));
            for j in 0..=s {
                for i in 0..=s {
                    coords.push([i as f64 * h, j as f64 * h]);
                    boundary.push(i == 0 || j == 0 || i == s || j == s);
                }
            }
            let mut elements = Vec::with_capacity(2 * s * s);
            for j in 0..s {
                for i in 0..s {
                    elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    elements.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
            (coords, elements, boundary)
        };

        let mut dof_of_node = vec![None; coords.len()];
        let mut node_of_dof = Vec::new();
        for (node, &b) in boundary.iter().enumerate() {
            if !b {
                dof_of_node[node] = Some(node_of_dof.len());
                node_of_dof.push(node);
            }
        }
        let k = node_of_dof.len();

        // local stiffness and load per element, restricted to interior dofs
        let mut local: Vec<Vec<(usize, usize, f64)>> = Vec::with_capacity(elements.len());
        let mut load = DVector::zeros(k);
        for el in &elements {
            let (grads, measure) = element_geometry(&coords, el);
            let mut entries = Vec::new();
            for (a, &na) in el.iter().enumerate() {
                let Some(ra) = dof_of_node[na] else { continue };
                load[ra] += measure / el.len() as f64;
                for (b, &nb) in el.iter().enumerate() {
                    let Some(cb) = dof_of_node[nb] else { continue };
                    let g = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                    entries.push((ra, cb, measure * g));
                }
            }
            local.push(entries);
        }

        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); k];
        for entries in &local {
            for &(r, c, _) in entries {
                rows[r].push(c);
            }
        }
        let mut offsets = Vec::with_capacity(k + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            offsets.push(indices.len());
        }
        let pattern = SparsityPattern::try_from_offsets_and_indices(k, k, offsets.clone(), indices.clone())
            .expect("structured pattern is valid");
        let contributions = local
            .into_iter()
            .map(|entries| {
                entries
                    .into_iter()
                    .map(|(r, c, v)| {
                        let row = &indices[offsets[r]..offsets[r + 1]];
                        let slot = offsets[r] + row.binary_search(&c).expect("entry in pattern");
                        (slot, v)
                    })
                    .collect()
            })
            .collect::<Vec<Vec<(usize, f64)>>>();

        let pattern = Arc::new(pattern);
        let ones = vec![1.0; elements.len()];
        let gram = Arc::new(assemble_values(&pattern, &contributions, &ones));
        Ok(Self {
            dim,
            subdivisions,
            coords,
            elements,
            dof_of_node,
            node_of_dof,
            pattern,
            contributions,
            load,
            gram,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn h(&self) -> f64 {
        1.0 / self.subdivisions as f64
    }

    /// Number of interior unknowns `K`.
    pub fn num_dofs(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    /// Coordinates of interior node `dof`.
    pub fn dof_coord(&self, dof: usize) -> [f64; 2] {
        self.coords[self.node_of_dof[dof]]
    }

    /// Element centroids, in element order; the second coordinate is 0 in 1D.
    pub fn centroids(&self) -> Vec<[f64; 2]> {
        self.elements
            .iter()
            .map(|el| {
                let mut c = [0.0; 2];
                for &n in el {
                    c[0] += self.coords[n][0];
                    c[1] += self.coords[n][1];
                }
                [c[0] / el.len() as f64, c[1] / el.len() as f64]
            })
            .collect()
    }

    /// Load vector for `f = 1`.
    pub fn load(&self) -> &NodalField {
        &self.load
    }

    /// The Dirichlet Laplacian `K_V` (coefficient identically 1).
    pub fn gram(&self) -> &Arc<CsrMatrix<f64>> {
        &self.gram
    }

    /// Stiffness matrix for per-element coefficient values.
    pub fn stiffness_from_element_values(&self, values: &[f64]) -> CsrMatrix<f64> {
        assert_eq!(values.len(), self.elements.len());
        assemble_values(&self.pattern, &self.contributions, values)
    }

    /// Assembles the stiffness matrix with one-point centroid quadrature.
    ///
    /// Fails if the coefficient is not strictly positive at some centroid.
    pub fn assemble<F>(&self, coefficient: F) -> Result<FemSystem>
    where
        F: Fn(&[f64; 2]) -> f64,
    {
        let values: Vec<f64> = self.centroids().iter().map(&coefficient).collect();
        if let Some(&v) = values.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Positivity {
                value: v,
                sample: None,
            });
        }
        Ok(FemSystem {
            stiffness: self.stiffness_from_element_values(&values),
            load: self.load.clone(),
        })
    }

    /// `sqrt(u^T K_V u)`, the H^1_0 seminorm of the P1 interpolant.
    pub fn v_norm(&self, field: &NodalField) -> f64 {
        v_inner(&self.gram, field.as_slice(), field.as_slice()).max(0.0).sqrt()
    }
}

fn assemble_values(
    pattern: &Arc<SparsityPattern>,
    contributions: &[Vec<(usize, f64)>],
    coefficient: &[f64],
) -> CsrMatrix<f64> {
    let mut values = vec![0.0; pattern.nnz()];
    for (entries, &a) in contributions.iter().zip(coefficient) {
        for &(slot, v) in entries {
            values[slot] += a * v;
        }
    }
    CsrMatrix::try_from_pattern_and_values(SparsityPattern::clone(pattern), values).expect("values match pattern")
}

// Gradients of the nodal basis functions and the element measure.
fn element_geometry(coords: &[[f64; 2]], el: &[usize]) -> (Vec<[f64; 2]>, f64) {
    if el.len() == 2 {
        let h = coords[el[1]][0] - coords[el[0]][0];
        (vec![[-1.0 / h, 0.0], [1.0 / h, 0.0]], h)
    } else {
        let [x0, y0] = coords[el[0]];
        let [x1, y1] = coords[el[1]];
        let [x2, y2] = coords[el[2]];
        let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        let grads = vec![
            [(y1 - y2) / det, (x2 - x1) / det],
            [(y2 - y0) / det, (x0 - x2) / det],
            [(y0 - y1) / det, (x1 - x0) / det],
        ];
        (grads, 0.5 * det.abs())
    }
}

/// `u^T M v` for a symmetric CSR matrix `M`.
pub fn v_inner(gram: &CsrMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    gram.row_iter()
        .enumerate()
        .map(|(r, row)| {
            let mv: f64 = row.col_indices().iter().zip(row.values()).map(|(&c, &x)| x * v[c]).sum();
            u[r] * mv
        })
        .sum()
}

/// Stiffness matrix and load vector of one coefficient realization.
#[derive(Clone, Debug)]
pub struct FemSystem {
    pub stiffness: CsrMatrix<f64>,
    pub load: NodalField,
}

impl FemSystem {
    /// Solves `S u = b` by Jacobi-preconditioned conjugate gradients to
    /// relative residual `1e-12`.
    pub fn solve(&self) -> Result<NodalField> {
        conjugate_gradient(&self.stiffness, &self.load, 1e-12)
    }
}

fn csr_mul(m: &CsrMatrix<f64>, x: &DVector<f64>, out: &mut DVector<f64>) {
    for (r, row) in m.row_iter().enumerate() {
        out[r] = row.col_indices().iter().zip(row.values()).map(|(&c, &v)| v * x[c]).sum();
    }
}

pub fn conjugate_gradient(m: &CsrMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> Result<DVector<f64>> {
    let n = b.len();
    let mut x = DVector::zeros(n);
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut diag = DVector::from_element(n, 1.0);
    for (r, row) in m.row_iter().enumerate() {
        if let Some(i) = row.col_indices().iter().position(|&c| c == r) {
            diag[r] = row.values()[i];
        }
    }
    let mut r = b.clone();
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut ap = DVector::zeros(n);
    let cap = 20 * n + 100;
    for _ in 0..cap {
        csr_mul(m, &p, &mut ap);
        let alpha = rz / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= rel_tol * bnorm {
            return Ok(x);
        }
        z = r.component_div(&diag);
        let rz_new = r.dot(&z);
        p *= rz_new / rz;
        p += &z;
        rz = rz_new;
    }
    Err(Error::CgNotConverged {
        iterations: cap,
        residual: r.norm() / bnorm,
    })
}

/// Dense copy of a CSR matrix, for tests and small diagnostics.
pub fn to_dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, row) in m.row_iter().enumerate() {
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            out[(r, c)] += v;
        }
    }
    out
}
