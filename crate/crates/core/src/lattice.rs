//! Bravais lattices clipped to a box, their cells, interaction directions and
//! crystallographic normals.
//!
//! Atoms sit at `ε(ρ + Aλ)` for `λ ∈ ℤ^d` strictly inside `Ω = (0,l_1)×…×(0,l_d)`.
//! A cell is identified by the lattice index of its all-minus corner; its
//! corners are numbered as a binary counter over `{−½,½}^d`, bit `j` of the
//! corner index selecting `+½` in coordinate `j`, so corner 0 is `A(−½,…,−½)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_3};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cross3, dot, norm, rotation_2d, rotation_x, rotation_z, Mat};

/// Tolerance used when deduplicating unit normals.
pub const NORMAL_DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Preset {
    Triangular,
    Square,
    Cubic,
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Triangular => "triangular",
            Preset::Square => "square",
            Preset::Cubic => "cubic",
            Preset::Custom => "custom",
        }
    }
}

/// Basis matrix `A = (v_1,…,v_d)` of a Bravais lattice, `det A > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BravaisBasis {
    preset: Preset,
    angles: Vec<f64>,
    matrix: Mat,
    inverse: Mat,
    det: f64,
}

fn check_angle(preset: Preset, value: f64, max: f64) -> Result<()> {
    if !(0.0..max).contains(&value) {
        return Err(Error::AngleOutOfRange {
            preset: preset.name(),
            value,
            min: 0.0,
            max,
        });
    }
    Ok(())
}

impl BravaisBasis {
    /// Builds one of the preset orientations.
    ///
    /// * triangular: `T_φ · [[1, ½], [0, √3/2]]`, `φ ∈ [0, π/3)`
    /// * square: `T_φ`, `φ ∈ [0, π/2)`
    /// * cubic: `R_z(ψ) R_x(φ)` with `angles = [φ, ψ]`, both in `[0, π/2)`
    ///
    /// Missing angles default to zero.
    pub fn preset(preset: Preset, angles: &[f64]) -> Result<Self> {
        let angle = |i: usize| angles.get(i).copied().unwrap_or(0.0);
        let expected = match preset {
            Preset::Triangular | Preset::Square => 1,
            Preset::Cubic => 2,
            Preset::Custom => {
                return Err(Error::InvalidArgument(
                    "custom lattices are built from an explicit matrix".into(),
                ))
            }
        };
        if angles.len() > expected {
            return Err(Error::InvalidArgument(format!(
                "{} lattice takes at most {expected} angle(s), got {}",
                preset.name(),
                angles.len()
            )));
        }
        let matrix = match preset {
            Preset::Triangular => {
                check_angle(preset, angle(0), FRAC_PI_3)?;
                let base = Mat::from_rows(&[&[1.0, 0.5], &[0.0, libm::sqrt(3.0) / 2.0]]);
                rotation_2d(angle(0)).mul(&base)
            }
            Preset::Square => {
                check_angle(preset, angle(0), FRAC_PI_2)?;
                rotation_2d(angle(0))
            }
            Preset::Cubic => {
                check_angle(preset, angle(0), FRAC_PI_2)?;
                check_angle(preset, angle(1), FRAC_PI_2)?;
                rotation_z(angle(1)).mul(&rotation_x(angle(0)))
            }
            Preset::Custom => unreachable!(),
        };
        let mut basis = Self::from_matrix(matrix)?;
        basis.preset = preset;
        basis.angles = (0..expected).map(angle).collect();
        Ok(basis)
    }

    /// Arbitrary basis given by its column vectors packed in `matrix`.
    pub fn custom(matrix: Mat) -> Result<Self> {
        Self::from_matrix(matrix)
    }

    fn from_matrix(matrix: Mat) -> Result<Self> {
        let d = matrix.rows();
        if matrix.cols() != d || !(d == 2 || d == 3) {
            return Err(Error::InvalidArgument(format!(
                "basis must be 2x2 or 3x3, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let det = matrix.det();
        let inverse = matrix.inverse();
        match inverse {
            Some(inverse) if det > 0.0 && det.is_finite() => Ok(BravaisBasis {
                preset: Preset::Custom,
                angles: Vec::new(),
                matrix,
                inverse,
                det,
            }),
            _ => Err(Error::SingularBasis { det }),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn preset_kind(&self) -> Preset {
        self.preset
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn inverse(&self) -> &Mat {
        &self.inverse
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// `A·t` for an integer coordinate vector.
    pub fn apply_int<T: Copy + Into<f64>>(&self, t: &[T]) -> Vec<f64> {
        let tf: Vec<f64> = t.iter().map(|&x| x.into()).collect();
        self.matrix.mul_vec(&tf)
    }

    /// `l_A = Σ_j |v_j · e_1|`.
    pub fn l_a(&self) -> f64 {
        self.matrix.row(0).iter().map(|x| libm::fabs(*x)).sum()
    }

    /// Condition number in the Frobenius norm.
    pub fn condition(&self) -> f64 {
        self.matrix.norm() * self.inverse.norm()
    }
}

/// Corners of the reference cell `A{−½,½}^d` in binary-counter order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    dim: usize,
    /// `signs[i][j] ∈ {−1, 1}`: sign of coordinate `j` of corner `i`.
    signs: Vec<Vec<i8>>,
    /// Corner coordinates, point-major: corner `i` is `corners[i*d..(i+1)*d]`.
    corners: Vec<f64>,
}

impl CellGeometry {
    pub fn new(basis: &BravaisBasis) -> Self {
        let d = basis.dim();
        let n = 1usize << d;
        let signs: Vec<Vec<i8>> = (0..n)
            .map(|i| {
                (0..d)
                    .map(|j| if (i >> j) & 1 == 1 { 1 } else { -1 })
                    .collect()
            })
            .collect();
        let mut corners = Vec::with_capacity(n * d);
        for s in &signs {
            let half: Vec<f64> = s.iter().map(|&x| 0.5 * f64::from(x)).collect();
            corners.extend(basis.matrix().mul_vec(&half));
        }
        CellGeometry {
            dim: d,
            signs,
            corners,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn corner_count(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self, i: usize) -> &[i8] {
        &self.signs[i]
    }

    pub fn corner(&self, i: usize) -> &[f64] {
        &self.corners[i * self.dim..(i + 1) * self.dim]
    }

    /// The matrix `Z`, point-major (`2^d` columns of length `d`).
    pub fn z(&self) -> &[f64] {
        &self.corners
    }

    /// Integer offset of corner `i` from corner 0, i.e. its bit pattern.
    pub fn offset(&self, i: usize) -> Vec<i64> {
        (0..self.dim).map(|j| ((i >> j) & 1) as i64).collect()
    }
}

/// Placement of the lattice inside the box.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Shift {
    /// `ρ = A(½,…,½)`.
    CellCenter,
    /// `ρ` chosen so the center of `Ω` is a cell center. The atom set is then
    /// point-symmetric about the center of `Ω`.
    Centered,
    /// Explicit `ρ` in reference length units (reduced into `A[0,1)^d`).
    Explicit(Vec<f64>),
}

impl Default for Shift {
    fn default() -> Self {
        Shift::Centered
    }
}

/// `Ω = (0,l_1)×…×(0,l_d)` with atomic spacing `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lengths: Vec<f64>,
    pub epsilon: f64,
    pub shift: Shift,
}

impl DomainBox {
    pub fn new(lengths: Vec<f64>, epsilon: f64) -> Self {
        DomainBox {
            lengths,
            epsilon,
            shift: Shift::default(),
        }
    }

    pub fn with_shift(mut self, shift: Shift) -> Self {
        self.shift = shift;
        self
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.lengths.len() != d {
            return Err(Error::InvalidDomain(format!(
                "expected {d} side lengths, got {}",
                self.lengths.len()
            )));
        }
        if self.lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidDomain("side lengths must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidDomain("epsilon must be positive".into()));
        }
        if let Shift::Explicit(rho) = &self.shift {
            if rho.len() != d || rho.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDomain(
                    "shift must have d finite entries".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Atoms of `εℒ ∩ Ω`, the inner cells and the clamped boundary strips.
#[derive(Debug, Clone)]
pub struct LatticeInstance {
    basis: BravaisBasis,
    cell: CellGeometry,
    domain: DomainBox,
    rho: Vec<f64>,
    positions: Vec<f64>,
    lambdas: Vec<i64>,
    grid_min: Vec<i64>,
    grid_dims: Vec<usize>,
    grid: Vec<u32>,
    cells: Vec<u32>,
    boundary_cells: usize,
    in_left: Vec<bool>,
    in_right: Vec<bool>,
    l_a: f64,
}

const NO_ATOM: u32 = u32::MAX;

struct AtomTable {
    positions: Vec<f64>,
    lambdas: Vec<i64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

fn enumerate_atoms(basis: &BravaisBasis, domain: &DomainBox, rho: &[f64]) -> AtomTable {
    let d = basis.dim();
    let eps = domain.epsilon;
    // Bound λ = A⁻¹(x/ε − ρ) over the corners of the box.
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for corner in 0..(1usize << d) {
        let x: Vec<f64> = (0..d)
            .map(|j| {
                let xj = if (corner >> j) & 1 == 1 {
                    domain.lengths[j]
                } else {
                    0.0
                };
                xj / eps - rho[j]
            })
            .collect();
        let lam = basis.inverse().mul_vec(&x);
        for j in 0..d {
            lo[j] = lo[j].min(libm::floor(lam[j]) as i64 - 1);
            hi[j] = hi[j].max(libm::ceil(lam[j]) as i64 + 1);
        }
    }
    let mut positions = Vec::new();
    let mut lambdas = Vec::new();
    let mut lam = lo.clone();
    let mut x = vec![0.0; d];
    'outer: loop {
        let lf: Vec<f64> = lam.iter().map(|&v| v as f64).collect();
        let al = basis.matrix().mul_vec(&lf);
        let mut inside = true;
        for j in 0..d {
            x[j] = eps * (rho[j] + al[j]);
            if !(x[j] > 0.0 && x[j] < domain.lengths[j]) {
                inside = false;
            }
        }
        if inside {
            positions.extend_from_slice(&x);
            lambdas.extend_from_slice(&lam);
        }
        // Odometer over the λ box, last coordinate fastest.
        let mut k = d;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            if lam[k] < hi[k] {
                lam[k] += 1;
                for item in lam.iter_mut().skip(k + 1) {
                    *item = 0;
                }
                for (m, item) in lam.iter_mut().enumerate().skip(k + 1) {
                    *item = lo[m];
                }
                break;
            }
        }
    }
    AtomTable {
        positions,
        lambdas,
        lo,
        hi,
    }
}

fn reduce_shift(basis: &BravaisBasis, rho: &[f64]) -> Vec<f64> {
    let t = basis.inverse().mul_vec(rho);
    let frac: Vec<f64> = t.iter().map(|v| v - libm::floor(*v)).collect();
    basis.matrix().mul_vec(&frac)
}

fn centered_shift(basis: &BravaisBasis, domain: &DomainBox) -> Vec<f64> {
    let d = basis.dim();
    let half_cell = basis.matrix().mul_vec(&vec![0.5; d]);
    let rho: Vec<f64> = (0..d)
        .map(|j| 0.5 * domain.lengths[j] / domain.epsilon - half_cell[j])
        .collect();
    reduce_shift(basis, &rho)
}

impl LatticeInstance {
    /// Builds `εℒ ∩ Ω` with its inner cells.
    ///
    /// Boundary cells (some but not all corners inside `Ω`) are counted but not
    /// stored; energies run over inner cells only.
    pub fn build(basis: &BravaisBasis, domain: &DomainBox) -> Result<Self> {
        let d = basis.dim();
        domain.validate(d)?;
        let rho = match &domain.shift {
            Shift::CellCenter => basis.matrix().mul_vec(&vec![0.5; d]),
            Shift::Explicit(r) => reduce_shift(basis, r),
            Shift::Centered => centered_shift(basis, domain),
        };
        let table = enumerate_atoms(basis, domain, &rho);
        let n_atoms = table.positions.len() / d;
        let grid_dims: Vec<usize> = (0..d)
            .map(|j| (table.hi[j] - table.lo[j] + 1) as usize)
            .collect();
        let grid_len: usize = grid_dims.iter().product();
        let mut grid = vec![NO_ATOM; grid_len];
        let flat = |lam: &[i64]| -> usize {
            let mut idx = 0usize;
            for j in 0..d {
                idx = idx * grid_dims[j] + (lam[j] - table.lo[j]) as usize;
            }
            idx
        };
        for i in 0..n_atoms {
            grid[flat(&table.lambdas[i * d..(i + 1) * d])] = i as u32;
        }

        let cell = CellGeometry::new(basis);
        let n_corners = cell.corner_count();
        let mut lat = LatticeInstance {
            basis: basis.clone(),
            cell,
            domain: domain.clone(),
            rho,
            positions: table.positions,
            lambdas: table.lambdas,
            grid_min: table.lo,
            grid_dims,
            grid,
            cells: Vec::new(),
            boundary_cells: 0,
            in_left: Vec::new(),
            in_right: Vec::new(),
            l_a: basis.l_a(),
        };

        // Every cell touching an atom has its all-minus corner at λ − b for some b ∈ {0,1}^d.
        let mut candidates: Vec<Vec<i64>> = Vec::new();
        for i in 0..n_atoms {
            let lam = lat.lambda(i).to_vec();
            for c in 0..n_corners {
                let off = lat.cell.offset(c);
                candidates.push(lam.iter().zip(&off).map(|(l, o)| l - o).collect());
            }
        }
        candidates.sort();
        candidates.dedup();
        let mut corner_ids = vec![0u32; n_corners];
        for origin in &candidates {
            let mut present = 0;
            for (c, slot) in corner_ids.iter_mut().enumerate() {
                let off = lat.cell.offset(c);
                let lam: Vec<i64> = origin.iter().zip(&off).map(|(l, o)| l + o).collect();
                match lat.atom_at(&lam) {
                    Some(id) => {
                        *slot = id as u32;
                        present += 1;
                    }
                    None => *slot = NO_ATOM,
                }
            }
            if present == n_corners {
                lat.cells.extend_from_slice(&corner_ids);
            } else if present > 0 {
                lat.boundary_cells += 1;
            }
        }
        if lat.cells.is_empty() {
            return Err(Error::DomainTooSmall);
        }

        let strip = 2.0 * lat.l_a * domain.epsilon;
        let l1 = domain.lengths[0];
        lat.in_left = (0..n_atoms).map(|i| lat.position(i)[0] <= strip).collect();
        lat.in_right = (0..n_atoms)
            .map(|i| lat.position(i)[0] >= l1 - strip)
            .collect();
        Ok(lat)
    }

    pub fn basis(&self) -> &BravaisBasis {
        &self.basis
    }

    pub fn cell_geometry(&self) -> &CellGeometry {
        &self.cell
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.domain.epsilon
    }

    /// The resolved lattice shift `ρ ∈ A[0,1)^d`.
    pub fn shift(&self) -> &[f64] {
        &self.rho
    }

    pub fn atom_count(&self) -> usize {
        self.positions.len() / self.dim()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len() / self.cell.corner_count()
    }

    pub fn boundary_cell_count(&self) -> usize {
        self.boundary_cells
    }

    /// Reference positions, point-major.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn lambda(&self, i: usize) -> &[i64] {
        let d = self.dim();
        &self.lambdas[i * d..(i + 1) * d]
    }

    pub fn atom_at(&self, lam: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (j, &l) in lam.iter().enumerate() {
            let off = l - self.grid_min[j];
            if off < 0 || off as usize >= self.grid_dims[j] {
                return None;
            }
            idx = idx * self.grid_dims[j] + off as usize;
        }
        match self.grid[idx] {
            NO_ATOM => None,
            id => Some(id as usize),
        }
    }

    /// Corner atom indices of inner cell `c`, in corner order.
    pub fn cell_corners(&self, c: usize) -> &[u32] {
        let n = self.cell.corner_count();
        &self.cells[c * n..(c + 1) * n]
    }

    /// Midpoint of inner cell `c` in the reference configuration.
    pub fn cell_midpoint(&self, c: usize) -> Vec<f64> {
        let d = self.dim();
        let corners = self.cell_corners(c);
        let mut m = vec![0.0; d];
        for &a in corners {
            for j in 0..d {
                m[j] += self.positions[a as usize * d + j];
            }
        }
        let n = corners.len() as f64;
        m.iter().map(|v| v / n).collect()
    }

    /// Writes `∇̄y` of cell `c` into `out` (point-major, `2^d` columns).
    pub fn discrete_gradient_into(&self, y: &[f64], c: usize, out: &mut [f64]) {
        let d = self.dim();
        let corners = self.cell_corners(c);
        let n = corners.len();
        let mut mean = [0.0f64; 3];
        for (k, &a) in corners.iter().enumerate() {
            let p = &y[a as usize * d..(a as usize + 1) * d];
            out[k * d..(k + 1) * d].copy_from_slice(p);
            for j in 0..d {
                mean[j] += p[j];
            }
        }
        let inv_eps = 1.0 / self.epsilon();
        for k in 0..n {
            for j in 0..d {
                out[k * d + j] = (out[k * d + j] - mean[j] / n as f64) * inv_eps;
            }
        }
    }

    /// `∇̄y = ε⁻¹(y_1 − ȳ, …, y_{2^d} − ȳ)` for inner cell `c`.
    pub fn discrete_gradient(&self, y: &[f64], c: usize) -> Result<Vec<f64>> {
        let d = self.dim();
        if y.len() != self.positions.len() {
            return Err(Error::InvalidArgument(format!(
                "configuration has {} coordinates, lattice needs {}",
                y.len(),
                self.positions.len()
            )));
        }
        if c >= self.cell_count() {
            return Err(Error::InvalidArgument(format!(
                "cell {c} is not an inner cell"
            )));
        }
        let mut out = vec![0.0; self.cell.corner_count() * d];
        self.discrete_gradient_into(y, c, &mut out);
        Ok(out)
    }

    pub fn l_a(&self) -> f64 {
        self.l_a
    }

    /// Atom lies in `B_1^ε = {x_1 ≤ 2 l_A ε}`.
    pub fn in_left_strip(&self, i: usize) -> bool {
        self.in_left[i]
    }

    /// Atom lies in `B_2^ε = {x_1 ≥ l_1 − 2 l_A ε}`.
    pub fn in_right_strip(&self, i: usize) -> bool {
        self.in_right[i]
    }

    pub fn is_clamped(&self, i: usize) -> bool {
        self.in_left[i] || self.in_right[i]
    }

    /// `min_j l_j / ε < 4`: the lattice is too coarse for asymptotic statements.
    pub fn is_coarse(&self) -> bool {
        self.domain
            .lengths
            .iter()
            .any(|&l| l / self.domain.epsilon < 4.0)
    }
}

/// One element of `𝒱 = A{−1,0,1}^d ∖ {0}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Direction {
    pub coeffs: Vec<i8>,
    pub vector: Vec<f64>,
    /// Number of nonzero integer coordinates, the `k` of `𝒱_k`.
    pub order: usize,
}

impl Direction {
    pub fn length(&self) -> f64 {
        norm(&self.vector)
    }
}

/// `𝒱`, its order classes `𝒱_k`, and the half set `𝒱⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSets {
    dim: usize,
    all: Vec<Direction>,
    half: Vec<Direction>,
}

impl DirectionSets {
    pub fn new(basis: &BravaisBasis) -> Self {
        let d = basis.dim();
        let total = 3usize.pow(d as u32);
        let mut all = Vec::with_capacity(total - 1);
        for code in 0..total {
            let mut c = code;
            let mut coeffs = vec![0i8; d];
            for slot in coeffs.iter_mut() {
                *slot = (c % 3) as i8 - 1;
                c /= 3;
            }
            coeffs.reverse();
            if coeffs.iter().all(|&x| x == 0) {
                continue;
            }
            let order = coeffs.iter().filter(|&&x| x != 0).count();
            let vector = basis.apply_int(&coeffs);
            all.push(Direction {
                coeffs,
                vector,
                order,
            });
        }
        let half = all
            .iter()
            .filter(|dir| dir.coeffs.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0))
            .cloned()
            .collect();
        DirectionSets { dim: d, all, half }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn all(&self) -> &[Direction] {
        &self.all
    }

    /// One representative per `±ν` pair: first nonzero integer coordinate positive.
    pub fn half(&self) -> &[Direction] {
        &self.half
    }

    pub fn of_order(&self, k: usize) -> impl Iterator<Item = &Direction> {
        self.all.iter().filter(move |d| d.order == k)
    }
}

/// A crystallographic normal with the directions spanning its hyperplane.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Normal {
    pub xi: Vec<f64>,
    /// Integer coordinates of `d − 1` directions in `𝒱` spanning `ξ^⊥`.
    pub spanning: Vec<Vec<i8>>,
}

/// `𝒫` up to sign: each hyperplane stored once, first nonzero entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSet {
    dim: usize,
    normals: Vec<Normal>,
}

fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| libm::fabs(**x) > 1e-12) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// True when `a = ±b` within `tol`.
pub fn same_up_to_sign(a: &[f64], b: &[f64], tol: f64) -> bool {
    let minus = a.iter().zip(b).all(|(x, y)| libm::fabs(x - y) < tol);
    let plus = a.iter().zip(b).all(|(x, y)| libm::fabs(x + y) < tol);
    minus || plus
}

impl NormalSet {
    /// Enumerates `𝒫`: in 2D the rotated half directions, in 3D normalized
    /// cross products of independent direction pairs.
    pub fn new(dirs: &DirectionSets) -> Self {
        let d = dirs.dim();
        let mut normals: Vec<Normal> = Vec::new();
        let mut push = |mut xi: Vec<f64>, spanning: Vec<Vec<i8>>| {
            let n = norm(&xi);
            for x in xi.iter_mut() {
                *x /= n;
            }
            canonical_sign(&mut xi);
            if !normals
                .iter()
                .any(|m| same_up_to_sign(&m.xi, &xi, NORMAL_DEDUP_TOL))
            {
                normals.push(Normal { xi, spanning });
            }
        };
        match d {
            2 => {
                for nu in dirs.half() {
                    let v = &nu.vector;
                    push(vec![-v[1], v[0]], vec![nu.coeffs.clone()]);
                }
            }
            _ => {
                let half = dirs.half();
                for (a, u) in half.iter().enumerate() {
                    for w in &half[a + 1..] {
                        let c = cross3(&u.vector, &w.vector);
                        if norm(&c) <= 1e-10 * u.length() * w.length() {
                            continue;
                        }
                        push(c.to_vec(), vec![u.coeffs.clone(), w.coeffs.clone()]);
                    }
                }
            }
        }
        NormalSet { dim: d, normals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[Normal] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        let n = norm(xi);
        let unit: Vec<f64> = xi.iter().map(|x| x / n).collect();
        self.normals
            .iter()
            .any(|m| same_up_to_sign(&m.xi, &unit, tol))
    }
}

/// Rank of `{u ∈ 𝒱 : |u·ξ| ≤ tol}`; equals `d − 1` exactly when `ξ ∈ 𝒫`.
pub fn orthogonal_rank(dirs: &DirectionSets, xi: &[f64], tol: f64) -> usize {
    let rows: Vec<f64> = dirs
        .all()
        .iter()
        .filter(|u| libm::fabs(dot(&u.vector, xi)) <= tol)
        .flat_map(|u| u.vector.iter().copied())
        .collect();
    let d = dirs.dim();
    if rows.is_empty() {
        return 0;
    }
    Mat::from_row_major(rows.len() / d, d, rows).rank(1e-9)
}

/// Integer offsets `t` (one per `±t` pair) with `|A t| = ℓ` within `tol·ℓ`.
pub fn shell_offsets(basis: &BravaisBasis, length: f64, tol: f64) -> Vec<Vec<i64>> {
    let d = basis.dim();
    let reach = libm::ceil(length * basis.inverse().norm()) as i64 + 1;
    let side = (2 * reach + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(d as u32) {
        let mut c = code;
        let mut t = vec![0i64; d];
        for slot in t.iter_mut() {
            *slot = (c % side) as i64 - reach;
            c /= side;
        }
        t.reverse();
        if !t.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
            continue;
        }
        let tf: Vec<f64> = t.iter().map(|&x| x as f64).collect();
        let len = norm(&basis.matrix().mul_vec(&tf));
        if libm::fabs(len - length) <= tol * length {
            out.push(t);
        }
    }
    out
}

/// Unordered atom pairs at reference distance `ε·ℓ` (relative tolerance `tol`).
pub fn neighbor_pairs(lat: &LatticeInstance, length: f64, tol: f64) -> Vec<(usize, usize)> {
    let offsets = shell_offsets(lat.basis(), length, tol);
    let mut pairs = Vec::new();
    for i in 0..lat.atom_count() {
        let lam = lat.lambda(i);
        for t in &offsets {
            let other: Vec<i64> = lam.iter().zip(t).map(|(a, b)| a + b).collect();
            if let Some(j) = lat.atom_at(&other) {
                pairs.push(if i < j { (i, j) } else { (j, i) });
            }
        }
    }
    pairs.sort_unstable();
    pairs
}
