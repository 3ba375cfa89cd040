//! Finite element snapshots `u_h(., y_i)` at parameter samples.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::coefficient::{positivity_scan, CoefficientModel};
use crate::error::{Error, Result};
use crate::fem::Mesh;
use crate::polychaos::ParamSample;

/// Solves the PDE at every sample; row `i` holds the nodal solution at `y_i`.
///
/// The coefficient is scanned over all samples first so that an
/// inadmissible sample aborts before any solve.
pub fn solve_snapshots(mesh: &Mesh, model: &CoefficientModel, samples: &[ParamSample]) -> Result<DMatrix<f64>> {
    let (min, at) = positivity_scan(model.field(), mesh, samples);
    if !(min > model.threshold()) {
        return Err(Error::Positivity { value: min, sample: at });
    }
    let split = model.affine_split(mesh).ok();
    let rows = samples
        .par_iter()
        .enumerate()
        .map(|(i, y)| {
            let system = match &split {
                Some(s) => s.system(y),
                None => model.assemble(mesh, y, i)?,
            };
            system.solve()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = DMatrix::zeros(samples.len(), mesh.num_dofs());
    for (i, row) in rows.iter().enumerate() {
        out.row_mut(i).copy_from(&row.transpose());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::AffineCoefficient;
    use crate::polychaos::draw_samples;
    use approx::assert_abs_diff_eq;

    #[test]
    fn affine_split_and_direct_assembly_agree() {
        let mesh = Mesh::build(2, 6).unwrap();
        let c = AffineCoefficient::new(5, 0.25).unwrap();
        let samples = draw_samples(5, 4, 1);
        let fast = solve_snapshots(&mesh, &CoefficientModel::Affine(c.clone()), &samples).unwrap();
        for (i, y) in samples.iter().enumerate() {
            let direct = mesh.assemble(|x| c.eval_affine(x, y)).unwrap().solve().unwrap();
            assert_abs_diff_eq!((fast.row(i).transpose() - direct).amax(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_model_solves() {
        let mesh = Mesh::build(1, 10).unwrap();
        let c = AffineCoefficient::new(4, 0.125).unwrap();
        let s = solve_snapshots(&mesh, &CoefficientModel::Log(c), &[ParamSample::zeros(4)]).unwrap();
        // constant coefficient log(9.5): u = x(1-x) / (2 log 9.5)
        for k in 0..mesh.num_dofs() {
            let x = mesh.dof_coord(k)[0];
            assert_abs_diff_eq!(s[(0, k)], x * (1.0 - x) / (2.0 * 9.5f64.ln()), epsilon = 1e-12);
        }
    }
}
