//! Toughness `β_A`, optimal cleavage normals, the surplus `Λ`, and the
//! sphere extrema `M₁, M₂` of the bond-breaking cost.
//!
//! The cost of a plane with unit normal `ξ` is `g(ξ) = Σ_{ν∈𝒱⁺} β(ν)|ν·ξ|`.
//! Normalized by the cross-section `|ξ·e₁|` it is minimized over the finite
//! set `𝒫`; the sphere sampling here only validates that minimum.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{Normal, NormalSet};
use crate::linalg::{dot, norm, rotation_axis_angle, Mat};
use crate::potentials::BondBeta;

/// Relative tolerance for collecting tied minimizers.
pub const TIE_TOL: f64 = 1e-9;

/// Number of sphere samples used for validation and `M₂`.
pub const SPHERE_SAMPLES: usize = 100_000;

/// Default safety factor in the minimum specimen length.
pub const DEFAULT_LENGTH_SAFETY: f64 = 4.0;

/// Below this `|ξ·e₁|` a normal is treated as parallel to the load.
const PARALLEL_TOL: f64 = 1e-12;

/// `g(ξ) = Σ β(ν)|ν·ξ|` over the carried directions of `𝒱⁺`.
pub fn cost(betas: &[BondBeta], xi: &[f64]) -> f64 {
    betas
        .iter()
        .filter(|b| b.beta > 0.0)
        .map(|b| b.beta * libm::fabs(dot(&b.direction.vector, xi)))
        .sum()
}

/// `g(ξ)/|ξ·e₁|` for unit or non-unit `ξ`; `None` when `ξ·e₁ = 0`.
pub fn normalized_cost(betas: &[BondBeta], xi: &[f64]) -> Option<f64> {
    let c = libm::fabs(xi[0]);
    if c <= PARALLEL_TOL * norm(xi) {
        None
    } else {
        Some(cost(betas, xi) / c)
    }
}

/// `Λ(ς) = (g(ς) − |e₁·ς| β_A) / |ς|`.
pub fn surplus(betas: &[BondBeta], varsigma: &[f64], beta_a: f64) -> Result<f64> {
    let n = norm(varsigma);
    if !(n > 0.0) {
        return Err(Error::InvalidArgument(
            "surplus needs a nonzero direction".into(),
        ));
    }
    Ok((cost(betas, varsigma) - libm::fabs(varsigma[0]) * beta_a) / n)
}

/// Normalized cost of one crystallographic normal.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalCost {
    pub normal: Normal,
    /// `None` when the normal is perpendicular to `e₁`.
    pub ratio: Option<f64>,
}

/// `β_A`, its minimizers and the sphere validation.
#[derive(Debug, Clone, PartialEq)]
pub struct FractureConstants {
    pub beta_a: f64,
    /// All normals of `𝒫` within the tie tolerance of `β_A`.
    pub optimal: Vec<Normal>,
    pub table: Vec<NormalCost>,
    pub m1: f64,
    pub m2: f64,
    /// Smallest normalized cost among the sphere samples.
    pub sampled_min_ratio: f64,
    /// Smallest `Λ` among the sphere samples.
    pub sampled_min_surplus: f64,
    /// Sampled directions away from every stored minimizer also attain `β_A`.
    pub degenerate_continuum: bool,
}

impl FractureConstants {
    /// Largest `|ξ·e₁|` among the optimal normals.
    pub fn best_cross_section(&self) -> f64 {
        self.optimal
            .iter()
            .map(|n| libm::fabs(n.xi[0]))
            .fold(0.0, f64::max)
    }
}

/// Points spread over the unit sphere `S^{d−1}`, rotated by a seeded random
/// rotation. Circle points are equispaced; sphere points follow a
/// Fibonacci spiral.
pub fn sphere_points(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match d {
        2 => {
            let offset: f64 = rng.gen();
            (0..n)
                .map(|k| {
                    let t = 2.0 * core::f64::consts::PI * (k as f64 + offset) / n as f64;
                    vec![libm::cos(t), libm::sin(t)]
                })
                .collect()
        }
        _ => {
            let axis = [
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            ];
            let angle = rng.gen::<f64>() * core::f64::consts::PI;
            let rot = if norm(&axis) > 1e-6 {
                rotation_axis_angle(&axis, angle)
            } else {
                Mat::identity(3)
            };
            let golden = core::f64::consts::PI * (3.0 - libm::sqrt(5.0));
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = libm::sqrt((1.0 - z * z).max(0.0));
                    let t = golden * k as f64;
                    rot.mul_vec(&[r * libm::cos(t), r * libm::sin(t), z])
                })
                .collect()
        }
    }
}

/// Subgradient ascent step `ξ ← s(ξ)/|s(ξ)|`, `s = Σ β sign(ν·ξ) ν`. Never
/// decreases `g` on the sphere.
fn ascend(betas: &[BondBeta], xi: &[f64], steps: usize) -> Vec<f64> {
    let d = xi.len();
    let mut cur = xi.to_vec();
    let mut best = cost(betas, &cur);
    for _ in 0..steps {
        let mut s = vec![0.0; d];
        for b in betas.iter().filter(|b| b.beta > 0.0) {
            let p = dot(&b.direction.vector, &cur);
            let sg = if p > 0.0 {
                1.0
            } else if p < 0.0 {
                -1.0
            } else {
                0.0
            };
            for (si, vi) in s.iter_mut().zip(&b.direction.vector) {
                *si += b.beta * sg * vi;
            }
        }
        let n = norm(&s);
        if !(n > 0.0) {
            break;
        }
        let next: Vec<f64> = s.iter().map(|x| x / n).collect();
        let val = cost(betas, &next);
        if val <= best {
            break;
        }
        best = val;
        cur = next;
    }
    cur
}

/// `(M₁, M₂)`: minimum and maximum of `g` over the unit sphere.
///
/// `g` is a polyhedral norm, so its minimum on the sphere sits on a ray
/// where `d − 1` independent hyperplanes `ν^⊥` meet, which is a normal of
/// `𝒫`. The maximum comes from sampling followed by ascent from the best
/// candidates.
pub fn sphere_extrema(betas: &[BondBeta], normals: &NormalSet, seed: u64) -> Result<(f64, f64)> {
    if betas.iter().all(|b| b.beta <= 0.0) {
        return Err(Error::Degenerate("no direction carries a bond".into()));
    }
    let d = normals.dim();
    let points = sphere_points(d, SPHERE_SAMPLES, seed);
    let mut vals: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(k, p)| (cost(betas, p), k))
        .collect();
    let mut m1 = normals
        .normals()
        .iter()
        .map(|n| cost(betas, &n.xi))
        .fold(f64::INFINITY, f64::min);
    for (v, _) in &vals {
        m1 = m1.min(*v);
    }
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut m2 = vals.first().map_or(0.0, |v| v.0);
    for &(_, k) in vals.iter().take(10) {
        let xi = ascend(betas, &points[k], 20);
        m2 = m2.max(cost(betas, &xi));
    }
    Ok((m1, m2))
}

/// Computes `β_A` over `𝒫` and validates it against sphere samples drawn
/// with `seed`.
pub fn beta_a(betas: &[BondBeta], normals: &NormalSet, seed: u64) -> Result<FractureConstants> {
    let table: Vec<NormalCost> = normals
        .normals()
        .iter()
        .map(|n| NormalCost {
            normal: n.clone(),
            ratio: normalized_cost(betas, &n.xi),
        })
        .collect();
    let beta_a = table
        .iter()
        .filter_map(|c| c.ratio)
        .fold(f64::INFINITY, f64::min);
    if !beta_a.is_finite() {
        return Err(Error::Degenerate(
            "every crystallographic normal is perpendicular to e1".into(),
        ));
    }
    if !(beta_a > 0.0) {
        return Err(Error::Degenerate(format!(
            "toughness must be positive, got {beta_a}"
        )));
    }
    let optimal: Vec<Normal> = table
        .iter()
        .filter(|c| c.ratio.is_some_and(|r| r <= beta_a * (1.0 + TIE_TOL)))
        .map(|c| c.normal.clone())
        .collect();

    let (m1, m2) = sphere_extrema(betas, normals, seed)?;
    let d = normals.dim();
    let points = sphere_points(d, SPHERE_SAMPLES, seed ^ 0x5eed);
    let mut sampled_min_ratio = f64::INFINITY;
    let mut sampled_min_surplus = f64::INFINITY;
    let mut degenerate_continuum = false;
    for p in &points {
        let s = cost(betas, p) - libm::fabs(p[0]) * beta_a;
        sampled_min_surplus = sampled_min_surplus.min(s);
        if let Some(r) = normalized_cost(betas, p) {
            sampled_min_ratio = sampled_min_ratio.min(r);
            if r <= beta_a * (1.0 + 1e-7)
                && optimal.iter().all(|n| angle_between_lines(&n.xi, p) > 1e-3)
            {
                degenerate_continuum = true;
            }
        }
    }
    Ok(FractureConstants {
        beta_a,
        optimal,
        table,
        m1,
        m2,
        sampled_min_ratio,
        sampled_min_surplus,
        degenerate_continuum,
    })
}

fn angle_between_lines(a: &[f64], b: &[f64]) -> f64 {
    let c = libm::fabs(dot(a, b)) / (norm(a) * norm(b));
    libm::acos(c.min(1.0))
}

/// `L = C · max{l₂,…,l_d} · M₂/M₁`.
pub fn min_length(m1: f64, m2: f64, transverse: &[f64], safety: f64) -> Result<f64> {
    if !(safety >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "safety factor must be at least 1, got {safety}"
        )));
    }
    if !(m1 > 0.0) {
        return Err(Error::Degenerate(
            "M1 = 0: no uniform minimum length exists".into(),
        ));
    }
    let lmax = transverse.iter().copied().fold(0.0, f64::max);
    if !(lmax > 0.0) {
        return Err(Error::InvalidDomain(
            "transverse side lengths must be positive".into(),
        ));
    }
    Ok(safety * lmax * m2 / m1)
}
