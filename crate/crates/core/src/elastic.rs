//! Linearized elasticity of a cell energy: the quadratic form `𝒬` on
//! symmetric strains, the stiffness `α_A`, and the optimal strain `F̄(r)`.
//!
//! Strain vectors use the orthonormal (Mandel) coordinates of symmetric
//! matrices: diagonal entries first, then `√2·f_ij` for `i < j` in the order
//! `12` (2D) or `12, 13, 23` (3D). In these coordinates `fᵀ𝒬f = q(F)` and
//! `𝒬` is the matrix of `q` in an orthonormal basis.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::potentials::{deformed_cell, CellEnergyModel};

/// Base step of the second differences.
pub const FD_STEP: f64 = 1e-4;

/// Relative eigenvalue floor below which `𝒬` counts as not positive definite.
pub const DEFINITENESS_TOL: f64 = 1e-8;

/// `d̂ = d(d+1)/2`.
pub fn strain_dim(d: usize) -> usize {
    d * (d + 1) / 2
}

fn off_diagonal_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            v.push((i, j));
        }
    }
    v
}

/// Orthonormal basis of symmetric `d×d` matrices in strain-vector order.
pub fn strain_basis(d: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(strain_dim(d));
    for i in 0..d {
        let mut e = Mat::zeros(d, d);
        e[(i, i)] = 1.0;
        out.push(e);
    }
    let s = core::f64::consts::FRAC_1_SQRT_2;
    for (i, j) in off_diagonal_pairs(d) {
        let mut e = Mat::zeros(d, d);
        e[(i, j)] = s;
        e[(j, i)] = s;
        out.push(e);
    }
    out
}

/// Strain vector of the symmetric part of `f`.
pub fn strain_vector(f: &Mat) -> Vec<f64> {
    let d = f.rows();
    let mut v: Vec<f64> = (0..d).map(|i| f[(i, i)]).collect();
    let s = core::f64::consts::SQRT_2;
    for (i, j) in off_diagonal_pairs(d) {
        v.push(s * 0.5 * (f[(i, j)] + f[(j, i)]));
    }
    v
}

/// Symmetric matrix with strain vector `v`.
pub fn strain_matrix(v: &[f64], d: usize) -> Mat {
    let mut f = Mat::zeros(d, d);
    for (e, c) in strain_basis(d).iter().zip(v) {
        f = f.add(&e.scale(*c));
    }
    f
}

/// `q(F) = d²/dt² W_cell(Z + tF·Z)` at `t = 0`, from the pair energy by
/// central second differences at `t` and `t/2` with one Richardson step.
pub fn quadratic_form_value(model: &CellEnergyModel, f: &Mat) -> f64 {
    let cell = model.cell();
    let w0 = model.pair_energy(cell.z());
    let second = |t: f64| {
        let plus = model.pair_energy(&deformed_cell(cell, f, t));
        let minus = model.pair_energy(&deformed_cell(cell, f, -t));
        (plus - 2.0 * w0 + minus) / (t * t)
    };
    let coarse = second(FD_STEP);
    let fine = second(0.5 * FD_STEP);
    (4.0 * fine - coarse) / 3.0
}

/// Assembles `𝒬` by polarization of `q` over the strain basis.
///
/// Fails with [`Error::InadmissibleModel`] when `𝒬` is not positive definite.
pub fn strain_quadratic_form(model: &CellEnergyModel) -> Result<Mat> {
    let d = model.dim();
    let basis = strain_basis(d);
    let n = basis.len();
    let diag: Vec<f64> = basis
        .iter()
        .map(|e| quadratic_form_value(model, e))
        .collect();
    let mut q = Mat::zeros(n, n);
    for a in 0..n {
        q[(a, a)] = diag[a];
        for b in a + 1..n {
            let sum = basis[a].add(&basis[b]);
            let v = 0.5 * (quadratic_form_value(model, &sum) - diag[a] - diag[b]);
            q[(a, b)] = v;
            q[(b, a)] = v;
        }
    }
    check_definite(&q)?;
    Ok(q)
}

fn check_definite(q: &Mat) -> Result<Vec<f64>> {
    let eig = q.symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
    let min = eig.first().copied().unwrap_or(0.0);
    if !(max > 0.0) || min <= DEFINITENESS_TOL * max {
        return Err(Error::InadmissibleModel(format!(
            "strain quadratic form is not positive definite (eigenvalues {min:e} .. {max:e})"
        )));
    }
    Ok(eig)
}

fn inverse_of(q: &Mat) -> Result<Mat> {
    q.inverse()
        .ok_or_else(|| Error::InadmissibleModel("strain quadratic form is singular".into()))
}

/// `α_A = 1/(e₁ᵀ𝒬⁻¹e₁)`.
pub fn alpha_a(q: &Mat) -> Result<f64> {
    let inv = inverse_of(q)?;
    Ok(1.0 / inv[(0, 0)])
}

/// `α_A = det 𝒬 / det 𝒬̂` with `𝒬̂` the minor without the first row and column.
pub fn alpha_a_det_ratio(q: &Mat) -> Result<f64> {
    let minor = q.minor(0, 0).det();
    if minor == 0.0 {
        return Err(Error::InadmissibleModel(
            "reduced strain form is singular".into(),
        ));
    }
    Ok(q.det() / minor)
}

/// `F̄(r)`: the symmetric strain with `F₁₁ = r` minimizing `q`.
pub fn optimal_strain(q: &Mat, r: f64) -> Result<Mat> {
    let inv = inverse_of(q)?;
    let col = inv.column(0);
    let mut f: Vec<f64> = col.iter().map(|c| r * c / col[0]).collect();
    f[0] = r;
    Ok(strain_matrix(&f, dim_of(q)?))
}

/// `Q̃(r) = α_A r²`.
pub fn reduced_energy(q: &Mat, r: f64) -> Result<f64> {
    Ok(alpha_a(q)? * r * r)
}

/// `fᵀ𝒬f` for the symmetric part of `f`.
pub fn quadratic_form(q: &Mat, f: &Mat) -> f64 {
    let v = strain_vector(f);
    crate::linalg::dot(&v, &q.mul_vec(&v))
}

fn dim_of(q: &Mat) -> Result<usize> {
    match q.rows() {
        3 => Ok(2),
        6 => Ok(3),
        n => Err(Error::InvalidArgument(format!(
            "{n}x{n} is not a strain form size"
        ))),
    }
}

/// Everything the cleavage law needs from the elastic regime.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticConstants {
    pub q: Mat,
    pub alpha_a: f64,
    /// `α_A` from the determinant ratio, kept as a cross-check.
    pub alpha_a_det: f64,
    /// `F̄(1)`; `F̄(r) = r·F̄(1)`.
    pub f_bar_unit: Mat,
    /// Eigenvalues of `𝒬`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `max |q(H·Z)| / |H|²` over the basis of skew matrices.
    pub null_space_residual: f64,
}

impl ElasticConstants {
    pub fn compute(model: &CellEnergyModel) -> Result<Self> {
        let q = strain_quadratic_form(model)?;
        let eigenvalues = check_definite(&q)?;
        let alpha_a = alpha_a(&q)?;
        let alpha_a_det = alpha_a_det_ratio(&q)?;
        let f_bar_unit = optimal_strain(&q, 1.0)?;
        let d = model.dim();
        let mut null_space_residual = 0.0f64;
        for (i, j) in off_diagonal_pairs(d) {
            let mut h = Mat::zeros(d, d);
            h[(i, j)] = 1.0;
            h[(j, i)] = -1.0;
            let r = libm::fabs(quadratic_form_value(model, &h)) / (h.norm() * h.norm());
            null_space_residual = null_space_residual.max(r);
        }
        Ok(ElasticConstants {
            q,
            alpha_a,
            alpha_a_det,
            f_bar_unit,
            eigenvalues,
            null_space_residual,
        })
    }

    /// `|α_A − det𝒬/det𝒬̂| / α_A`.
    pub fn formula_agreement(&self) -> f64 {
        libm::fabs(self.alpha_a - self.alpha_a_det) / self.alpha_a
    }

    pub fn f_bar(&self, r: f64) -> Mat {
        self.f_bar_unit.scale(r)
    }

    pub fn reduced_energy(&self, r: f64) -> f64 {
        self.alpha_a * r * r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn strain_coordinates_round_trip() {
        let f = Mat::from_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 5.0], &[3.0, 5.0, 6.0]]);
        let v = strain_vector(&f);
        assert!(strain_matrix(&v, 3).sub(&f).max_abs() < 1e-15);
        let n: f64 = v.iter().map(|x| x * x).sum();
        assert_relative_eq!(n, f.norm() * f.norm(), max_relative = 1e-14);
    }

    #[test]
    fn triangular_form_matches_reference_matrix() {
        let m = CellEnergyModel::triangular(0.0, 1.0, 1.0).unwrap();
        let q = strain_quadratic_form(&m).unwrap();
        let s = 3.0 / 8.0;
        let expected =
            Mat::from_rows(&[&[3.0 * s, s, 0.0], &[s, 3.0 * s, 0.0], &[0.0, 0.0, 2.0 * s]]);
        assert!(q.sub(&expected).max_abs() < 1e-6, "{q:?}");
    }

    #[test]
    fn unit_strain_has_unit_first_entry() {
        let m = CellEnergyModel::square(0.3, [1.0, 2.0], [1.0, 1.0]).unwrap();
        let ec = ElasticConstants::compute(&m).unwrap();
        assert_eq!(ec.f_bar_unit[(0, 0)], 1.0);
        assert!(ec.formula_agreement() < 1e-9);
        assert!(optimal_strain(&ec.q, 0.0).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn indefinite_form_is_rejected() {
        let q = Mat::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(check_definite(&q).is_err());
    }

    #[test]
    fn square_without_diagonals_is_inadmissible() {
        use crate::lattice::{BravaisBasis, Preset};
        use crate::potentials::{PairPotential, Shell, ShellClass};
        use alloc::vec;
        let b = BravaisBasis::preset(Preset::Square, &[0.0]).unwrap();
        let m = CellEnergyModel::new(
            &b,
            vec![Shell::new(
                ShellClass::Nearest,
                PairPotential::morse(1.0, 1.0).unwrap(),
            )],
        )
        .unwrap();
        assert!(matches!(
            strain_quadratic_form(&m),
            Err(Error::InadmissibleModel(_))
        ));
    }
}
