//! The limiting cleavage law and the two finite-lattice competitors: the
//! homogeneously strained crystal and the crystal cut along one plane.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracture::cost;
use crate::lattice::{Direction, LatticeInstance};
use crate::linalg::{dot, norm, Mat};
use crate::potentials::{BondBeta, CellEnergyModel};

/// Which side of the law a load falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Branch {
    Elastic,
    Fracture,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Elastic => "elastic",
            Branch::Fracture => "fracture",
        }
    }
}

/// `E_lim(a) = P·min{½ l₁ α_A a², β_A}` with `P = Π_{j≥2} l_j / det A`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CleavageLaw {
    pub prefactor: f64,
    pub l1: f64,
    pub alpha_a: f64,
    pub beta_a: f64,
    pub a_crit: f64,
    /// Free-form description of the model that produced the constants.
    pub provenance: String,
}

impl CleavageLaw {
    /// `lengths` are the box side lengths `l_1,…,l_d`.
    pub fn new(
        alpha_a: f64,
        beta_a: f64,
        det_a: f64,
        lengths: &[f64],
        provenance: String,
    ) -> Result<Self> {
        for (name, v) in [("alpha_A", alpha_a), ("beta_A", beta_a), ("det A", det_a)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if lengths.is_empty() || lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidDomain("side lengths must be positive".into()));
        }
        let l1 = lengths[0];
        let prefactor = lengths[1..].iter().product::<f64>() / det_a;
        Ok(CleavageLaw {
            prefactor,
            l1,
            alpha_a,
            beta_a,
            a_crit: libm::sqrt(2.0 * beta_a / (l1 * alpha_a)),
            provenance,
        })
    }

    /// `½ l₁ α_A`.
    pub fn elastic_coefficient(&self) -> f64 {
        0.5 * self.l1 * self.alpha_a
    }

    /// `P·½ l₁ α_A a²`, the elastic branch without the cut-off.
    pub fn elastic_energy(&self, a: f64) -> f64 {
        self.prefactor * self.elastic_coefficient() * a * a
    }

    /// `P·β_A`.
    pub fn plateau(&self) -> f64 {
        self.prefactor * self.beta_a
    }

    /// `E_lim(a)`; `a = ∞` gives the plateau.
    pub fn energy(&self, a: f64) -> f64 {
        if a.is_infinite() {
            return self.plateau();
        }
        self.elastic_energy(a).min(self.plateau())
    }

    pub fn branch(&self, a: f64) -> Branch {
        if libm::fabs(a) < self.a_crit {
            Branch::Elastic
        } else {
            Branch::Fracture
        }
    }
}

/// The two tension boundary conditions on the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum BoundaryVariant {
    /// `y¹ = (1 + a_ε) x₁` on both strips.
    #[default]
    Bc1,
    /// `y¹ = x₁` on the left strip, `y¹ = x₁ + a_ε l₁` on the right one.
    Bc2,
}

impl BoundaryVariant {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryVariant::Bc1 => "bc1",
            BoundaryVariant::Bc2 => "bc2",
        }
    }

    /// Prescribed `y¹` of a clamped atom at reference `x`, or `None` when
    /// the atom is free.
    pub fn target(self, lat: &LatticeInstance, atom: usize, a_eps: f64) -> Option<f64> {
        let x1 = lat.position(atom)[0];
        let l1 = lat.domain().lengths[0];
        match self {
            BoundaryVariant::Bc1 if lat.is_clamped(atom) => Some((1.0 + a_eps) * x1),
            BoundaryVariant::Bc2 if lat.in_left_strip(atom) => Some(x1),
            BoundaryVariant::Bc2 if lat.in_right_strip(atom) => Some(x1 + a_eps * l1),
            _ => None,
        }
    }
}

/// Deformed atom positions with their boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    /// Point-major positions, `d` entries per atom.
    pub y: Vec<f64>,
    pub variant: BoundaryVariant,
    pub a_eps: f64,
    /// Atoms whose first coordinate is prescribed.
    pub clamped: Vec<bool>,
}

impl Configuration {
    /// The undeformed lattice under the given condition (not yet clamped).
    pub fn reference(lat: &LatticeInstance, variant: BoundaryVariant, a_eps: f64) -> Self {
        Configuration {
            y: lat.positions().to_vec(),
            variant,
            a_eps,
            clamped: (0..lat.atom_count()).map(|i| lat.is_clamped(i)).collect(),
        }
    }

    /// Largest deviation of a clamped first coordinate from its target.
    pub fn boundary_residual(&self, lat: &LatticeInstance) -> f64 {
        let d = lat.dim();
        (0..lat.atom_count())
            .filter_map(|i| {
                self.variant
                    .target(lat, i, self.a_eps)
                    .map(|t| libm::fabs(self.y[i * d] - t))
            })
            .fold(0.0, f64::max)
    }

    /// Overwrites the clamped first coordinates with their targets.
    pub fn enforce_boundary(&mut self, lat: &LatticeInstance) {
        let d = lat.dim();
        for i in 0..lat.atom_count() {
            if let Some(t) = self.variant.target(lat, i, self.a_eps) {
                self.y[i * d] = t;
            }
        }
    }
}

/// `y(x) = x + G x` with `G = F̄(a_ε)` plus the skew matrix that clears the
/// first row off the diagonal, so `y¹ = (1 + a_ε)x₁` holds everywhere.
/// Returns the configuration under bc1 and the Frobenius norm of the skew
/// correction (zero whenever `F̄` has first row `(a_ε, 0, …)`).
pub fn elastic_config(lat: &LatticeInstance, a_eps: f64, f_bar_unit: &Mat) -> (Configuration, f64) {
    let d = lat.dim();
    let mut g = f_bar_unit.scale(a_eps);
    let mut skew = 0.0;
    for j in 1..d {
        let v = g[(0, j)];
        g[(0, j)] = 0.0;
        g[(j, 0)] += v;
        skew += 2.0 * v * v;
    }
    g[(0, 0)] = a_eps;
    let mut conf = Configuration::reference(lat, BoundaryVariant::Bc1, a_eps);
    for i in 0..lat.atom_count() {
        let x = lat.position(i);
        let gx = g.mul_vec(x);
        for a in 0..d {
            conf.y[i * d + a] = x[a] + gx[a];
        }
    }
    (conf, libm::sqrt(skew))
}

/// A crack plane `{x·ξ = c}` with `ξ` a unit vector, `ξ₁ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackPlane {
    pub xi: Vec<f64>,
    pub offset: f64,
}

impl CrackPlane {
    /// Normalizes `ξ`, flips it so `ξ₁ > 0`, and places the plane through the
    /// box center unless `offset` is given (in the normalized `ξ`).
    pub fn new(lat: &LatticeInstance, xi: &[f64], offset: Option<f64>) -> Result<Self> {
        let n = norm(xi);
        if xi.len() != lat.dim() || !(n > 0.0) {
            return Err(Error::InvalidPlane(
                "normal must be a nonzero d-vector".into(),
            ));
        }
        let sign = if xi[0] < 0.0 { -1.0 } else { 1.0 };
        let xi: Vec<f64> = xi.iter().map(|x| sign * x / n).collect();
        let center: Vec<f64> = lat.domain().lengths.iter().map(|l| 0.5 * l).collect();
        let offset = offset.unwrap_or_else(|| dot(&xi, &center));
        let plane = CrackPlane { xi, offset };
        plane.check_fit(lat)?;
        Ok(plane.nudged(lat))
    }

    /// Range of `x₁` over `Π ∩ Ω̄`.
    pub fn x1_range(&self, lengths: &[f64]) -> Option<(f64, f64)> {
        if self.xi[0] <= 1e-12 {
            return None;
        }
        let d = lengths.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for corner in 0..(1usize << (d - 1)) {
            let mut s = self.offset;
            for j in 1..d {
                if (corner >> (j - 1)) & 1 == 1 {
                    s -= self.xi[j] * lengths[j];
                }
            }
            let x1 = s / self.xi[0];
            lo = lo.min(x1);
            hi = hi.max(x1);
        }
        Some((lo, hi))
    }

    fn check_fit(&self, lat: &LatticeInstance) -> Result<()> {
        let lengths = &lat.domain().lengths;
        let strip = 2.0 * lat.l_a() * lat.epsilon();
        match self.x1_range(lengths) {
            None => Err(Error::InvalidPlane("plane is parallel to the load direction".into())),
            Some((lo, hi)) if hi <= 0.0 || lo >= lengths[0] => {
                Err(Error::InvalidPlane("plane misses the domain".into()))
            }
            Some((lo, hi)) if lo <= strip || hi >= lengths[0] - strip => Err(Error::InvalidPlane(format!(
                "plane reaches the clamped strips: x1 in [{lo}, {hi}], strips end at {strip} and {}",
                lengths[0] - strip
            ))),
            Some(_) => Ok(()),
        }
    }

    fn nudged(mut self, lat: &LatticeInstance) -> Self {
        let eps = lat.epsilon();
        let d = lat.dim();
        for _ in 0..1000 {
            let hit = lat
                .positions()
                .chunks(d)
                .any(|x| libm::fabs(dot(x, &self.xi) - self.offset) <= 1e-9 * eps);
            if !hit {
                break;
            }
            self.offset += 1e-6 * eps;
        }
        self
    }

    /// `Area(Π ∩ Ω) = Π_{j≥2} l_j / ξ₁` for a plane that exits only through
    /// the transverse faces.
    pub fn area(&self, lengths: &[f64]) -> f64 {
        lengths[1..].iter().product::<f64>() / self.xi[0]
    }

    pub fn above(&self, x: &[f64]) -> bool {
        dot(x, &self.xi) > self.offset
    }
}

/// Two rigid pieces separated by `plane`.
///
/// Under bc2 the piece above the plane moves by `l₁ a_ε e₁`. Under bc1 both
/// strips are stretched by `1 + a_ε` and each piece follows the inner edge of
/// its strip, so the opening is `a_ε (l₁ − 4 l_A ε)`.
pub fn cracked_config(
    lat: &LatticeInstance,
    plane: &CrackPlane,
    a_eps: f64,
    variant: BoundaryVariant,
) -> Configuration {
    let d = lat.dim();
    let l1 = lat.domain().lengths[0];
    let w = 2.0 * lat.l_a() * lat.epsilon();
    let mut conf = Configuration::reference(lat, variant, a_eps);
    for i in 0..lat.atom_count() {
        let x = lat.position(i);
        let above = plane.above(x);
        conf.y[i * d] += match variant {
            BoundaryVariant::Bc2 if above => l1 * a_eps,
            BoundaryVariant::Bc2 => 0.0,
            BoundaryVariant::Bc1 if above => a_eps * x[0].max(l1 - w),
            BoundaryVariant::Bc1 => a_eps * x[0].min(w),
        };
    }
    conf
}

/// Severed bonds of one direction class.
#[derive(Debug, Clone, PartialEq)]
pub struct BrokenBonds {
    pub direction: Direction,
    pub shell: usize,
    pub count: usize,
    /// `Area·|ν·ξ| / (ε^{d−1} det A)`.
    pub expected: f64,
    /// `count / expected`, absent when `ν` lies in the plane.
    pub ratio: Option<f64>,
}

/// Counts lattice bonds of every carried direction class that cross the plane.
pub fn count_broken_bonds(
    lat: &LatticeInstance,
    model: &CellEnergyModel,
    plane: &CrackPlane,
) -> Vec<BrokenBonds> {
    let d = lat.dim();
    let eps = lat.epsilon();
    let area = plane.area(&lat.domain().lengths);
    let scale = libm::pow(eps, (d - 1) as f64) * lat.basis().det();
    let mut out = Vec::new();
    for b in model.bond_betas().iter().filter(|b| b.beta > 0.0) {
        let Some(shell) = b.shell else { continue };
        let t: Vec<i64> = b.direction.coeffs.iter().map(|&c| i64::from(c)).collect();
        let mut count = 0;
        let mut other = alloc::vec![0i64; d];
        for i in 0..lat.atom_count() {
            for (o, (l, s)) in other.iter_mut().zip(lat.lambda(i).iter().zip(&t)) {
                *o = l + s;
            }
            if let Some(j) = lat.atom_at(&other) {
                if plane.above(lat.position(i)) != plane.above(lat.position(j)) {
                    count += 1;
                }
            }
        }
        let expected = area * libm::fabs(dot(&b.direction.vector, &plane.xi)) / scale;
        out.push(BrokenBonds {
            direction: b.direction.clone(),
            shell,
            count,
            expected,
            ratio: (expected > 1e-9).then(|| count as f64 / expected),
        });
    }
    out
}

/// `(Π_{j≥2} l_j / det A) · g(ξ̂)/|ξ̂₁|`, the limit of the cracked energy.
pub fn crack_energy_limit(
    betas: &[BondBeta],
    xi: &[f64],
    lengths: &[f64],
    det_a: f64,
) -> Result<f64> {
    let n = norm(xi);
    if !(n > 0.0) || libm::fabs(xi[0]) <= 1e-12 * n {
        return Err(Error::InvalidPlane(
            "normal must not be perpendicular to e1".into(),
        ));
    }
    let prefactor = lengths[1..].iter().product::<f64>() / det_a;
    Ok(prefactor * cost(betas, xi) / libm::fabs(xi[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BravaisBasis, DomainBox, Preset};
    use alloc::vec;
    use approx::assert_relative_eq;

    fn square_lattice(eps: f64) -> LatticeInstance {
        let b = BravaisBasis::preset(Preset::Square, &[0.0]).unwrap();
        LatticeInstance::build(&b, &DomainBox::new(vec![4.0, 1.0], eps)).unwrap()
    }

    #[test]
    fn law_is_continuous_at_critical_load() {
        let law =
            CleavageLaw::new(1.0, 2.0, libm::sqrt(3.0) / 2.0, &[10.0, 1.0], String::new()).unwrap();
        assert_relative_eq!(law.a_crit, libm::sqrt(0.4), max_relative = 1e-15);
        assert_relative_eq!(
            law.elastic_energy(law.a_crit),
            law.plateau(),
            max_relative = 1e-12
        );
        assert_relative_eq!(law.plateau(), 4.0 / libm::sqrt(3.0), max_relative = 1e-15);
        assert_eq!(law.energy(0.0), 0.0);
        assert_eq!(law.energy(f64::INFINITY), law.plateau());
        assert!(CleavageLaw::new(0.0, 1.0, 1.0, &[1.0, 1.0], String::new()).is_err());
    }

    #[test]
    fn elastic_config_satisfies_bc1() {
        let lat = square_lattice(0.1);
        let f = Mat::from_rows(&[&[1.0, 0.2], &[0.2, -0.3]]);
        let (c, skew) = elastic_config(&lat, 0.05, &f);
        assert!(c.boundary_residual(&lat) < 1e-15);
        assert!(skew > 0.0);
    }

    #[test]
    fn cracked_config_satisfies_bc2() {
        let lat = square_lattice(0.1);
        let plane = CrackPlane::new(&lat, &[1.0, 0.0], None).unwrap();
        let c = cracked_config(&lat, &plane, 0.3, BoundaryVariant::Bc2);
        assert!(c.boundary_residual(&lat) < 1e-15);
    }

    #[test]
    fn cracked_config_satisfies_bc1_without_folding() {
        let lat = square_lattice(0.1);
        let m = CellEnergyModel::square(0.0, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let plane = CrackPlane::new(&lat, &[1.0, 0.0], None).unwrap();
        let c = cracked_config(&lat, &plane, 0.8, BoundaryVariant::Bc1);
        assert!(c.boundary_residual(&lat) < 1e-12);
        let e = crate::potentials::total_energy(&lat, &c.y, &m).unwrap();
        assert!(e < 1e3 * m.max_beta());
    }

    #[test]
    fn plane_through_clamps_is_rejected() {
        let lat = square_lattice(0.1);
        assert!(CrackPlane::new(&lat, &[1.0, 0.0], Some(0.1)).is_err());
        assert!(CrackPlane::new(&lat, &[0.0, 1.0], None).is_err());
        assert!(CrackPlane::new(&lat, &[1.0, 0.0], Some(7.0)).is_err());
    }

    #[test]
    fn vertical_cut_breaks_one_bond_per_row() {
        let lat = square_lattice(0.1);
        let m = CellEnergyModel::square(0.0, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let plane = CrackPlane::new(&lat, &[1.0, 0.0], None).unwrap();
        let counts = count_broken_bonds(&lat, &m, &plane);
        for b in &counts {
            match b.direction.coeffs.as_slice() {
                [1, 0] => assert!((9..=11).contains(&b.count)),
                [0, 1] => assert_eq!(b.count, 0),
                _ => assert!((18..=22).contains(&(2 * b.count))),
            }
        }
    }
}
