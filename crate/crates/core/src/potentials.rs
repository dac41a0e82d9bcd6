//! Pair potentials and the mass-spring cell energies built from them.
//!
//! A cell energy sums, over every unordered pair of cell corners whose
//! integer offset `t ∈ {−1,0,1}^d` has length matching a shell, the term
//! `2^{k−d} · W(|G_i − G_j| / ℓ)` where `k` counts the nonzero entries of `t`
//! and `ℓ` is the shell's rest length. A bond in direction class `𝒱_k` is
//! shared by `2^{d−k}` cells, so on interior bonds the weights add up to one.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{BravaisBasis, CellGeometry, Direction, DirectionSets, LatticeInstance};
use crate::linalg::{pairwise_sum, Mat};

/// Relative tolerance used to match corner-pair lengths against shell lengths.
pub const SHELL_TOL: f64 = 1e-9;

/// Default activation radius of the orientation penalty.
pub const DEFAULT_CHI_RADIUS: f64 = 10.0;

/// Functional form of a pair potential with prescribed `ᾱ = W''(1)` and
/// `β̄ = W(∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialForm {
    /// `β̄(1 − e^{−k(r−1)})²` with `k = √(ᾱ/(2β̄))`.
    Morse,
    /// `β̄(r^{−12} − 2r^{−6} + 1)`, which forces `ᾱ = 72β̄`.
    LennardJones,
}

#[derive(Debug, Clone, PartialEq)]
enum Form {
    Morse { k: f64 },
    LennardJones,
    Table(MonotoneCubic),
}

/// A radial pair potential `W : (0,∞) → [0,∞)` with `W(1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotential {
    alpha: f64,
    beta: f64,
    form: Form,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Builds a potential of the given form realizing `ᾱ` and `β̄`.
pub fn make_potential(form: PotentialForm, alpha: f64, beta: f64) -> Result<PairPotential> {
    match form {
        PotentialForm::Morse => PairPotential::morse(alpha, beta),
        PotentialForm::LennardJones => PairPotential::lennard_jones(alpha, beta),
    }
}

impl PairPotential {
    pub fn morse(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(PairPotential {
            alpha,
            beta,
            form: Form::Morse {
                k: libm::sqrt(alpha / (2.0 * beta)),
            },
        })
    }

    pub fn lennard_jones(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        if libm::fabs(alpha - 72.0 * beta) > 1e-12 * alpha {
            return Err(Error::InvalidPotential(format!(
                "Lennard-Jones form requires alpha = 72 beta, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(PairPotential {
            alpha,
            beta,
            form: Form::LennardJones,
        })
    }

    /// Tabulated potential through the knots `(r_i, w_i)`.
    ///
    /// Knots must be strictly increasing in `r`, include `r = 1` with value
    /// zero, and carry nonnegative values. Beyond the last knot the value is
    /// held at `w_last`, which becomes `β̄`; below the first knot the end
    /// segment is extended linearly. `ᾱ` is read off the interpolant by a
    /// central second difference at `r = 1`.
    pub fn table(r: &[f64], w: &[f64]) -> Result<Self> {
        if r.len() != w.len() || r.len() < 3 {
            return Err(Error::InvalidPotential(
                "table needs at least three (r, w) knots of equal length".into(),
            ));
        }
        if r.windows(2).any(|p| !(p[1] > p[0])) || r.iter().chain(w).any(|x| !x.is_finite()) {
            return Err(Error::InvalidPotential(
                "table radii must be finite and strictly increasing".into(),
            ));
        }
        if w.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidPotential(
                "table values must be nonnegative".into(),
            ));
        }
        match r.iter().position(|&x| x == 1.0) {
            Some(i) if w[i] == 0.0 => {}
            _ => {
                return Err(Error::InvalidPotential(
                    "table must contain the knot (1, 0)".into(),
                ))
            }
        }
        let spline = MonotoneCubic::new(r.to_vec(), w.to_vec());
        let beta = *w.last().unwrap_or(&0.0);
        positive("plateau of table", beta)?;
        let h = 1e-4;
        let alpha =
            (spline.value(1.0 + h) - 2.0 * spline.value(1.0) + spline.value(1.0 - h)) / (h * h);
        positive("W''(1) of table", alpha)?;
        Ok(PairPotential {
            alpha,
            beta,
            form: Form::Table(spline),
        })
    }

    /// `ᾱ = W''(1)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `β̄ = lim_{r→∞} W(r)`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn form_name(&self) -> &'static str {
        match self.form {
            Form::Morse { .. } => "morse",
            Form::LennardJones => "lennard-jones",
            Form::Table(_) => "table",
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match &self.form {
            Form::Morse { k } => {
                let s = 1.0 - libm::exp(-k * (r - 1.0));
                self.beta * s * s
            }
            Form::LennardJones => {
                if r <= 0.0 {
                    return f64::INFINITY;
                }
                let r6 = libm::pow(r, -6.0);
                self.beta * (r6 * r6 - 2.0 * r6 + 1.0)
            }
            Form::Table(s) => s.value(r),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match &self.form {
            Form::Morse { k } => {
                let e = libm::exp(-k * (r - 1.0));
                2.0 * self.beta * k * e * (1.0 - e)
            }
            Form::LennardJones => {
                if r <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let r6 = libm::pow(r, -6.0);
                12.0 * self.beta * (r6 - r6 * r6) / r
            }
            Form::Table(s) => s.derivative(r),
        }
    }
}

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes, so each
/// monotone run of the data stays monotone.
#[derive(Debug, Clone, PartialEq)]
struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
            .collect();
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            m[i] = if delta[i - 1] * delta[i] <= 0.0 {
                0.0
            } else {
                0.5 * (delta[i - 1] + delta[i])
            };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / libm::sqrt(s);
                m[i] = tau * a * delta[i];
                m[i + 1] = tau * b * delta[i];
            }
        }
        // The plateau is held constant past the last knot, so the curve
        // arrives there flat.
        m[n - 1] = 0.0;
        MonotoneCubic { x, y, m }
    }

    fn segment(&self, r: f64) -> usize {
        match self.x.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    fn value(&self, r: f64) -> f64 {
        let n = self.x.len();
        if r >= self.x[n - 1] {
            return self.y[n - 1];
        }
        if r < self.x[0] {
            return self.y[0] + self.m[0] * (r - self.x[0]);
        }
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let t = (r - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
            + (t3 - 2.0 * t2 + t) * h * self.m[i]
            + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
            + (t3 - t2) * h * self.m[i + 1]
    }

    fn derivative(&self, r: f64) -> f64 {
        let n = self.x.len();
        if r >= self.x[n - 1] {
            return 0.0;
        }
        if r < self.x[0] {
            return self.m[0];
        }
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let t = (r - self.x[i]) / h;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.y[i]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * self.m[i]
            + (-6.0 * t2 + 6.0 * t) * self.y[i + 1]
            + (3.0 * t2 - 2.0 * t) * h * self.m[i + 1])
            / h
    }
}

/// Which neighbor distance a shell acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShellClass {
    /// Shortest length among the interaction directions.
    Nearest,
    /// Second shortest length.
    NextNearest,
    /// Explicit rest length in reference units.
    Length(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub class: ShellClass,
    pub potential: PairPotential,
}

impl Shell {
    pub fn new(class: ShellClass, potential: PairPotential) -> Self {
        Shell { class, potential }
    }
}

/// Orientation penalty: zero when every corner simplex is positively
/// oriented or `|G| ≥ radius`, and `value` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi {
    pub radius: f64,
    pub value: f64,
}

/// One weighted corner pair of the cell energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPair {
    pub i: usize,
    pub j: usize,
    /// `2^{k−d}`.
    pub weight: f64,
    /// Rest length `ℓ` of the shell.
    pub rest: f64,
    pub shell: usize,
}

/// `β(ν)` for one representative of a `±ν` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BondBeta {
    pub direction: Direction,
    pub beta: f64,
    /// Index of the carrying shell, if any.
    pub shell: Option<usize>,
}

/// Cell energy `W_cell` of a mass-spring model with orientation penalty.
#[derive(Debug, Clone)]
pub struct CellEnergyModel {
    basis: BravaisBasis,
    cell: CellGeometry,
    shells: Vec<Shell>,
    lengths: Vec<f64>,
    pairs: Vec<CellPair>,
    chi: Option<Chi>,
    betas: Vec<BondBeta>,
}

fn distinct_lengths(dirs: &DirectionSets) -> Vec<f64> {
    let mut ls: Vec<f64> = dirs.half().iter().map(|d| d.length()).collect();
    ls.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::new();
    for l in ls {
        if out
            .last()
            .map_or(true, |&p| libm::fabs(l - p) > SHELL_TOL * l)
        {
            out.push(l);
        }
    }
    out
}

fn close(a: f64, b: f64) -> bool {
    libm::fabs(a - b) <= SHELL_TOL * a.max(b)
}

impl CellEnergyModel {
    /// Assembles the cell energy for `basis` with the given shells. The
    /// penalty defaults to radius 10 and value `10⁶·max β̄`.
    pub fn new(basis: &BravaisBasis, shells: Vec<Shell>) -> Result<Self> {
        if shells.is_empty() {
            return Err(Error::InvalidPotential(
                "model needs at least one shell".into(),
            ));
        }
        let d = basis.dim();
        let cell = CellGeometry::new(basis);
        let dirs = DirectionSets::new(basis);
        let available = distinct_lengths(&dirs);
        let mut lengths = Vec::with_capacity(shells.len());
        for s in &shells {
            let l = match s.class {
                ShellClass::Nearest => available[0],
                ShellClass::NextNearest => *available.get(1).ok_or_else(|| {
                    Error::InvalidPotential("lattice has no next-nearest direction class".into())
                })?,
                ShellClass::Length(l) => {
                    positive("shell length", l)?;
                    *available.iter().find(|&&a| close(a, l)).ok_or_else(|| {
                        Error::InvalidPotential(format!("no interaction direction has length {l}"))
                    })?
                }
            };
            if lengths.iter().any(|&m| close(m, l)) {
                return Err(Error::InvalidPotential(format!(
                    "two shells act on length {l}"
                )));
            }
            lengths.push(l);
        }

        let n = cell.corner_count();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let t: Vec<i8> = (0..d)
                    .map(|b| (((j >> b) & 1) as i8) - (((i >> b) & 1) as i8))
                    .collect();
                let k = t.iter().filter(|&&x| x != 0).count();
                let len = crate::linalg::norm(&basis.apply_int(&t));
                if let Some(s) = lengths.iter().position(|&l| close(l, len)) {
                    pairs.push(CellPair {
                        i,
                        j,
                        weight: libm::ldexp(1.0, k as i32 - d as i32),
                        rest: lengths[s],
                        shell: s,
                    });
                }
            }
        }

        let betas = dirs
            .half()
            .iter()
            .map(|dir| {
                let shell = lengths.iter().position(|&l| close(l, dir.length()));
                BondBeta {
                    direction: dir.clone(),
                    beta: shell.map_or(0.0, |s| shells[s].potential.beta()),
                    shell,
                }
            })
            .collect();

        let max_beta = shells
            .iter()
            .map(|s| s.potential.beta())
            .fold(0.0, f64::max);
        Ok(CellEnergyModel {
            basis: basis.clone(),
            cell,
            shells,
            lengths,
            pairs,
            chi: Some(Chi {
                radius: DEFAULT_CHI_RADIUS,
                value: 1e6 * max_beta,
            }),
            betas,
        })
    }

    /// Replaces the orientation penalty; `None` switches it off.
    pub fn with_chi(mut self, chi: Option<Chi>) -> Result<Self> {
        if let Some(c) = chi {
            positive("chi radius", c.radius)?;
            if !(c.value >= 0.0) {
                return Err(Error::InvalidPotential(
                    "chi penalty must be nonnegative".into(),
                ));
            }
        }
        self.chi = chi;
        Ok(self)
    }

    /// Triangular lattice with one nearest-neighbor Morse shell.
    pub fn triangular(phi: f64, alpha: f64, beta: f64) -> Result<Self> {
        let basis = BravaisBasis::preset(crate::lattice::Preset::Triangular, &[phi])?;
        Self::new(
            &basis,
            vec![Shell::new(
                ShellClass::Nearest,
                PairPotential::morse(alpha, beta)?,
            )],
        )
    }

    /// Square lattice with nearest and next-nearest Morse shells.
    pub fn square(phi: f64, alpha: [f64; 2], beta: [f64; 2]) -> Result<Self> {
        let basis = BravaisBasis::preset(crate::lattice::Preset::Square, &[phi])?;
        Self::two_shell(&basis, alpha, beta)
    }

    /// Cubic lattice with nearest and next-nearest Morse shells.
    pub fn cubic(phi: f64, psi: f64, alpha: [f64; 2], beta: [f64; 2]) -> Result<Self> {
        let basis = BravaisBasis::preset(crate::lattice::Preset::Cubic, &[phi, psi])?;
        Self::two_shell(&basis, alpha, beta)
    }

    fn two_shell(basis: &BravaisBasis, alpha: [f64; 2], beta: [f64; 2]) -> Result<Self> {
        Self::new(
            basis,
            vec![
                Shell::new(
                    ShellClass::Nearest,
                    PairPotential::morse(alpha[0], beta[0])?,
                ),
                Shell::new(
                    ShellClass::NextNearest,
                    PairPotential::morse(alpha[1], beta[1])?,
                ),
            ],
        )
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &BravaisBasis {
        &self.basis
    }

    pub fn cell(&self) -> &CellGeometry {
        &self.cell
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    /// Resolved rest length of each shell.
    pub fn shell_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn pairs(&self) -> &[CellPair] {
        &self.pairs
    }

    pub fn chi(&self) -> Option<Chi> {
        self.chi
    }

    pub fn max_beta(&self) -> f64 {
        self.shells
            .iter()
            .map(|s| s.potential.beta())
            .fold(0.0, f64::max)
    }

    /// `β(ν)` over `𝒱⁺`; directions carried by no shell have `β = 0`.
    pub fn bond_betas(&self) -> &[BondBeta] {
        &self.betas
    }

    /// Sum of the weighted pair terms, without the penalty.
    pub fn pair_energy(&self, g: &[f64]) -> f64 {
        let d = self.dim();
        let mut e = 0.0;
        for p in &self.pairs {
            let r = dist(&g[p.i * d..(p.i + 1) * d], &g[p.j * d..(p.j + 1) * d]);
            e += p.weight * self.shells[p.shell].potential.value(r / p.rest);
        }
        e
    }

    /// True when every corner simplex of `g` is positively oriented.
    pub fn is_oriented(&self, g: &[f64]) -> bool {
        let d = self.dim();
        let n = self.cell.corner_count();
        let mut m = [0.0f64; 9];
        for i in 0..n {
            let mut sign = 1.0;
            for b in 0..d {
                let j = i ^ (1 << b);
                if (i >> b) & 1 == 1 {
                    sign = -sign;
                }
                for a in 0..d {
                    m[a * d + b] = g[j * d + a] - g[i * d + a];
                }
            }
            let det = if d == 2 {
                m[0] * m[3] - m[1] * m[2]
            } else {
                m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                    + m[2] * (m[3] * m[7] - m[4] * m[6])
            };
            if !(sign * det > 0.0) {
                return false;
            }
        }
        true
    }

    /// Value of the orientation penalty at `g`.
    pub fn chi_value(&self, g: &[f64]) -> f64 {
        match self.chi {
            None => 0.0,
            Some(c) => {
                // Norm of the mean-free part, so a translated G gives the same value.
                let d = self.dim();
                let n = self.cell.corner_count() as f64;
                let mut mean = [0.0f64; 3];
                for p in g.chunks(d) {
                    for a in 0..d {
                        mean[a] += p[a] / n;
                    }
                }
                let frob = libm::sqrt(
                    g.chunks(d)
                        .flat_map(|p| p.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)))
                        .sum(),
                );
                if frob >= c.radius || self.is_oriented(g) {
                    0.0
                } else {
                    c.value
                }
            }
        }
    }

    /// `W_cell(G)` for a point-major `G` with `2^d` columns.
    pub fn cell_energy(&self, g: &[f64]) -> f64 {
        self.pair_energy(g) + self.chi_value(g)
    }

    /// Splits the cell into the corners flagged `true` and the rest, moves
    /// the flagged ones by `t·direction`, and returns
    /// `|W_cell(G) − Σ β̄ · weight|` over the severed pairs.
    pub fn decomposition_check(&self, second: &[bool], t: f64, direction: &[f64]) -> Result<f64> {
        let d = self.dim();
        let n = self.cell.corner_count();
        if second.len() != n {
            return Err(Error::InvalidArgument(format!("partition needs {n} flags")));
        }
        if second.iter().all(|&b| b) || second.iter().all(|&b| !b) {
            return Err(Error::InvalidArgument(
                "partition must have two nonempty parts".into(),
            ));
        }
        positive("separation", t)?;
        let len = crate::linalg::norm(direction);
        if direction.len() != d || !(len > 0.0) {
            return Err(Error::InvalidArgument(
                "direction must be a nonzero d-vector".into(),
            ));
        }
        let mut g = self.cell.z().to_vec();
        for (c, &moved) in second.iter().enumerate() {
            if moved {
                for a in 0..d {
                    g[c * d + a] += t * direction[a] / len;
                }
            }
        }
        let severed: f64 = self
            .pairs
            .iter()
            .filter(|p| second[p.i] != second[p.j])
            .map(|p| p.weight * self.shells[p.shell].potential.beta())
            .sum();
        Ok(libm::fabs(self.cell_energy(&g) - severed))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `ℰ_ε(y) = ε^{d−1} Σ_{inner cells} W_cell(∇̄y)`, reduced pairwise.
pub fn total_energy(lat: &LatticeInstance, y: &[f64], model: &CellEnergyModel) -> Result<f64> {
    check_config(lat, y, model)?;
    let cells = cell_energies(lat, y, model);
    Ok(libm::pow(lat.epsilon(), (lat.dim() - 1) as f64) * pairwise_sum(&cells))
}

/// Per-cell `W_cell(∇̄y)` in inner-cell order.
pub fn cell_energies(lat: &LatticeInstance, y: &[f64], model: &CellEnergyModel) -> Vec<f64> {
    let mut g = vec![0.0; model.cell.corner_count() * lat.dim()];
    (0..lat.cell_count())
        .map(|c| {
            lat.discrete_gradient_into(y, c, &mut g);
            model.cell_energy(&g)
        })
        .collect()
}

pub(crate) fn check_config(
    lat: &LatticeInstance,
    y: &[f64],
    model: &CellEnergyModel,
) -> Result<()> {
    if model.dim() != lat.dim() {
        return Err(Error::InvalidArgument(String::from(
            "model and lattice dimensions differ",
        )));
    }
    if y.len() != lat.positions().len() {
        return Err(Error::InvalidArgument(format!(
            "configuration has {} coordinates, lattice needs {}",
            y.len(),
            lat.positions().len()
        )));
    }
    Ok(())
}

/// `(Z + t·F·Z)` in point-major layout, for a `d×d` matrix `f`.
pub fn deformed_cell(cell: &CellGeometry, f: &Mat, t: f64) -> Vec<f64> {
    let d = cell.dim();
    let mut g = cell.z().to_vec();
    for c in 0..cell.corner_count() {
        let fz = f.mul_vec(cell.corner(c));
        for a in 0..d {
            g[c * d + a] += t * fz[a];
        }
    }
    g
}
