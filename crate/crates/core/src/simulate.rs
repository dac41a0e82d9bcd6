//! Local minimization of `ℰ_ε` under the tension boundary conditions and
//! ε-refinement sweeps against the cleavage law.
//!
//! The cell sum is regrouped into a weighted bond list: every atom pair that
//! appears as a corner pair of some inner cell carries the sum of its cell
//! weights. This is the same energy with one term per bond, which makes the
//! analytic gradient cheap. The orientation penalty is evaluated per cell and
//! enters only the energy, so the line search rejects steps that invert a
//! cell.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::cleavage::{
    cracked_config, elastic_config, BoundaryVariant, CleavageLaw, Configuration, CrackPlane,
};
use crate::elastic::ElasticConstants;
use crate::error::{Error, Result};
use crate::fracture::FractureConstants;
use crate::lattice::{BravaisBasis, DomainBox, LatticeInstance};
use crate::linalg::{dot, pairwise_sum};
use crate::potentials::{check_config, CellEnergyModel};

/// Sets the clamped first coordinates of `config` for load `a_ε` under
/// `variant` and records the mask.
pub fn apply_boundary(
    lat: &LatticeInstance,
    mut config: Configuration,
    a_eps: f64,
    variant: BoundaryVariant,
) -> Configuration {
    config.a_eps = a_eps;
    config.variant = variant;
    config.clamped = (0..lat.atom_count())
        .map(|i| variant.target(lat, i, a_eps).is_some())
        .collect();
    config.enforce_boundary(lat);
    config
}

#[derive(Debug, Clone, Copy)]
struct Bond {
    a: u32,
    b: u32,
    weight: f64,
    rest: f64,
    shell: u32,
}

/// Energy and gradient evaluator for one lattice and model.
#[derive(Debug, Clone)]
pub struct BondSystem<'a> {
    lat: &'a LatticeInstance,
    model: &'a CellEnergyModel,
    bonds: Vec<Bond>,
    scale: f64,
}

impl<'a> BondSystem<'a> {
    pub fn new(lat: &'a LatticeInstance, model: &'a CellEnergyModel) -> Result<Self> {
        if lat.dim() != model.dim() {
            return Err(Error::InvalidArgument(
                "model and lattice dimensions differ".into(),
            ));
        }
        let mut raw = Vec::with_capacity(lat.cell_count() * model.pairs().len());
        for c in 0..lat.cell_count() {
            let corners = lat.cell_corners(c);
            for p in model.pairs() {
                let (x, y) = (corners[p.i], corners[p.j]);
                raw.push(Bond {
                    a: x.min(y),
                    b: x.max(y),
                    weight: p.weight,
                    rest: p.rest,
                    shell: p.shell as u32,
                });
            }
        }
        raw.sort_unstable_by_key(|b| (b.a, b.b));
        let mut bonds: Vec<Bond> = Vec::with_capacity(raw.len());
        for b in raw {
            match bonds.last_mut() {
                Some(last) if last.a == b.a && last.b == b.b => last.weight += b.weight,
                _ => bonds.push(b),
            }
        }
        Ok(BondSystem {
            lat,
            model,
            bonds,
            scale: libm::pow(lat.epsilon(), (lat.dim() - 1) as f64),
        })
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Number of inner cells on which the penalty is active.
    pub fn chi_violations(&self, y: &[f64]) -> usize {
        if self.model.chi().is_none() {
            return 0;
        }
        let mut g = vec![0.0; self.model.cell().corner_count() * self.lat.dim()];
        (0..self.lat.cell_count())
            .filter(|&c| {
                self.lat.discrete_gradient_into(y, c, &mut g);
                self.model.chi_value(&g) > 0.0
            })
            .count()
    }

    fn chi_total(&self, y: &[f64]) -> f64 {
        let Some(chi) = self.model.chi() else {
            return 0.0;
        };
        chi.value * self.chi_violations(y) as f64
    }

    /// `ℰ_ε(y)`.
    pub fn energy(&self, y: &[f64]) -> f64 {
        let d = self.lat.dim();
        let inv_eps = 1.0 / self.lat.epsilon();
        let shells = self.model.shells();
        let terms: Vec<f64> = self
            .bonds
            .iter()
            .map(|b| {
                let (ia, ib) = (b.a as usize * d, b.b as usize * d);
                let mut r2 = 0.0;
                for k in 0..d {
                    let t = y[ia + k] - y[ib + k];
                    r2 += t * t;
                }
                let r = libm::sqrt(r2) * inv_eps / b.rest;
                b.weight * shells[b.shell as usize].potential.value(r)
            })
            .collect();
        self.scale * (pairwise_sum(&terms) + self.chi_total(y))
    }

    /// `ℰ_ε(y)` and its gradient with respect to all coordinates. The penalty
    /// contributes to the energy only.
    pub fn energy_and_gradient(&self, y: &[f64], grad: &mut [f64]) -> Result<f64> {
        let d = self.lat.dim();
        let inv_eps = 1.0 / self.lat.epsilon();
        let shells = self.model.shells();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut terms = Vec::with_capacity(self.bonds.len());
        let mut delta = [0.0f64; 3];
        for b in &self.bonds {
            let (ia, ib) = (b.a as usize * d, b.b as usize * d);
            let mut r2 = 0.0;
            for k in 0..d {
                delta[k] = y[ia + k] - y[ib + k];
                r2 += delta[k] * delta[k];
            }
            let dist = libm::sqrt(r2);
            if dist == 0.0 {
                return Err(Error::CoincidentAtoms(b.a as usize, b.b as usize));
            }
            let r = dist * inv_eps / b.rest;
            let w = &shells[b.shell as usize].potential;
            terms.push(b.weight * w.value(r));
            let coef = self.scale * b.weight * w.derivative(r) * inv_eps / (b.rest * dist);
            for k in 0..d {
                grad[ia + k] += coef * delta[k];
                grad[ib + k] -= coef * delta[k];
            }
        }
        Ok(self.scale * (pairwise_sum(&terms) + self.chi_total(y)))
    }
}

/// Gradient of `ℰ_ε` over all coordinates, with zero entries on the clamped
/// first components.
pub fn energy_gradient(
    lat: &LatticeInstance,
    y: &[f64],
    model: &CellEnergyModel,
    clamped: &[bool],
) -> Result<Vec<f64>> {
    check_config(lat, y, model)?;
    let sys = BondSystem::new(lat, model)?;
    let mut g = vec![0.0; y.len()];
    sys.energy_and_gradient(y, &mut g)?;
    let d = lat.dim();
    for (i, &c) in clamped.iter().enumerate() {
        if c {
            g[i * d] = 0.0;
        }
    }
    Ok(g)
}

/// Minimizer settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MinimizeOptions {
    /// Stop when the largest free gradient entry falls below this;
    /// `None` means `1e-8·ε^{d−1}`.
    pub gradient_tolerance: Option<f64>,
    pub max_iterations: usize,
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Armijo constant of the backtracking line search.
    pub armijo: f64,
    /// Uniform random displacement of free coordinates, in units of `ε`,
    /// added to every start.
    pub perturbation: f64,
    pub seed: u64,
    pub record_trace: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            gradient_tolerance: None,
            max_iterations: 10_000,
            memory: 10,
            armijo: 1e-4,
            perturbation: 0.0,
            seed: 0,
            record_trace: false,
        }
    }
}

/// Why a descent run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchFailed,
    /// No relative energy decrease above `1e-14` over the last
    /// [`STALL_WINDOW`] accepted steps.
    Stalled,
    Diverged,
}

pub const STALL_WINDOW: usize = 50;

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StartReport {
    pub label: String,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub stop: StopReason,
    /// Trial points rejected because a cell was inverted.
    pub chi_rejections: usize,
    /// Energy after each accepted step (empty unless requested).
    pub trace: Vec<f64>,
}

/// Best-of-starts minimization result.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MinimizeReport {
    pub best_energy: f64,
    pub best_start: String,
    pub starts: Vec<StartReport>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub best_configuration: Vec<f64>,
}

/// A labeled initial configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Start {
    pub label: String,
    pub config: Configuration,
}

/// Which start families to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StartKinds {
    pub elastic: bool,
    pub cracked: bool,
}

impl Default for StartKinds {
    fn default() -> Self {
        StartKinds {
            elastic: true,
            cracked: true,
        }
    }
}

/// The elastic start and one cracked start per optimal normal whose plane
/// through the box center fits between the clamped strips.
pub fn default_starts(
    lat: &LatticeInstance,
    elastic: &ElasticConstants,
    fracture: &FractureConstants,
    a_eps: f64,
    variant: BoundaryVariant,
    kinds: StartKinds,
) -> Vec<Start> {
    let mut out = Vec::new();
    if kinds.elastic {
        out.push(Start {
            label: "elastic".into(),
            config: elastic_config(lat, a_eps, &elastic.f_bar_unit).0,
        });
    }
    if kinds.cracked {
        for (k, n) in fracture.optimal.iter().enumerate() {
            if let Ok(plane) = CrackPlane::new(lat, &n.xi, None) {
                out.push(Start {
                    label: if k == 0 {
                        "cracked".to_string()
                    } else {
                        format!("cracked-{k}")
                    },
                    config: cracked_config(lat, &plane, a_eps, variant),
                });
            }
        }
    }
    out
}

/// Runs L-BFGS from every start under `variant` at load `a_ε` and keeps the
/// lowest final energy. Ties go to the earlier start.
pub fn minimize(
    lat: &LatticeInstance,
    model: &CellEnergyModel,
    a_eps: f64,
    variant: BoundaryVariant,
    starts: &[Start],
    opts: &MinimizeOptions,
) -> Result<MinimizeReport> {
    if starts.is_empty() {
        return Err(Error::InvalidArgument(
            "minimize needs at least one start".into(),
        ));
    }
    if !(a_eps >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "load must be nonnegative, got {a_eps}"
        )));
    }
    let sys = BondSystem::new(lat, model)?;
    let mut reports = Vec::with_capacity(starts.len());
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for (k, s) in starts.iter().enumerate() {
        check_config(lat, &s.config.y, model)?;
        let mut conf = apply_boundary(lat, s.config.clone(), a_eps, variant);
        if opts.perturbation > 0.0 {
            let d = lat.dim();
            let amp = opts.perturbation * lat.epsilon();
            for (idx, v) in conf.y.iter_mut().enumerate() {
                let free = !(idx % d == 0 && conf.clamped[idx / d]);
                let r: f64 = rng.gen::<f64>() - 0.5;
                if free {
                    *v += 2.0 * amp * r;
                }
            }
        }
        let (report, y) = descend(&sys, lat, &conf, &s.label, opts)?;
        let better = match &best {
            None => true,
            Some((e, _, _)) => report.final_energy < *e,
        };
        if better {
            best = Some((report.final_energy, k, y));
        }
        reports.push(report);
    }
    let (best_energy, k, y) = best.expect("at least one start");
    Ok(MinimizeReport {
        best_energy,
        best_start: starts[k].label.clone(),
        starts: reports,
        best_configuration: y,
    })
}

fn free_indices(lat: &LatticeInstance, clamped: &[bool]) -> Vec<usize> {
    let d = lat.dim();
    (0..lat.atom_count() * d)
        .filter(|&idx| !(idx % d == 0 && clamped[idx / d]))
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
}

struct Evaluator<'s, 'a> {
    sys: &'s BondSystem<'a>,
    free: Vec<usize>,
    y: Vec<f64>,
    full_grad: Vec<f64>,
}

impl Evaluator<'_, '_> {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        for (k, &idx) in self.free.iter().enumerate() {
            self.y[idx] = x[k];
        }
        let e = self.sys.energy_and_gradient(&self.y, &mut self.full_grad)?;
        for (k, &idx) in self.free.iter().enumerate() {
            grad[k] = self.full_grad[idx];
        }
        Ok(e)
    }
}

fn descend(
    sys: &BondSystem<'_>,
    lat: &LatticeInstance,
    conf: &Configuration,
    label: &str,
    opts: &MinimizeOptions,
) -> Result<(StartReport, Vec<f64>)> {
    let d = lat.dim();
    let eps = lat.epsilon();
    let tol = opts
        .gradient_tolerance
        .unwrap_or_else(|| 1e-8 * libm::pow(eps, (d - 1) as f64));
    let free = free_indices(lat, &conf.clamped);
    let n = free.len();
    let mut ev = Evaluator {
        sys,
        free,
        y: conf.y.clone(),
        full_grad: vec![0.0; conf.y.len()],
    };
    let mut x: Vec<f64> = ev.free.iter().map(|&i| conf.y[i]).collect();
    let mut g = vec![0.0; n];
    let mut f = match ev.eval(&x, &mut g) {
        Ok(f) => f,
        Err(Error::CoincidentAtoms(..)) => f64::NAN,
        Err(e) => return Err(e),
    };
    let initial = f;
    let mut report = StartReport {
        label: label.into(),
        initial_energy: initial,
        final_energy: initial,
        iterations: 0,
        gradient_norm: inf_norm(&g),
        stop: StopReason::Converged,
        chi_rejections: 0,
        trace: Vec::new(),
    };
    if !f.is_finite() {
        report.stop = StopReason::Diverged;
        return Ok((report, ev.y));
    }

    let m = opts.memory.max(1);
    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rho_hist: Vec<f64> = Vec::with_capacity(m);
    let mut alpha_buf = vec![0.0; m];
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    let mut stop = StopReason::MaxIterations;
    let mut iter = 0;
    let mut window_start = f;
    while iter < opts.max_iterations {
        if inf_norm(&g) <= tol {
            stop = StopReason::Converged;
            break;
        }
        // Two-loop recursion.
        dir.copy_from_slice(&g);
        for k in (0..s_hist.len()).rev() {
            let a = rho_hist[k] * dot(&s_hist[k], &dir);
            alpha_buf[k] = a;
            for (di, yi) in dir.iter_mut().zip(&y_hist[k]) {
                *di -= a * yi;
            }
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            dir.iter_mut().for_each(|v| *v *= gamma);
        }
        for k in 0..s_hist.len() {
            let b = rho_hist[k] * dot(&y_hist[k], &dir);
            for (di, si) in dir.iter_mut().zip(&s_hist[k]) {
                *di += (alpha_buf[k] - b) * si;
            }
        }
        dir.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (di, gi) in dir.iter_mut().zip(&g) {
                *di = -gi;
            }
            slope = dot(&g, &dir);
        }
        let mut step = if s_hist.is_empty() {
            (0.01 * eps / inf_norm(&dir)).min(1.0)
        } else {
            1.0
        };

        let mut accepted = false;
        for _ in 0..60 {
            for k in 0..n {
                x_new[k] = x[k] + step * dir[k];
            }
            let trial = ev.eval(&x_new, &mut g_new);
            match trial {
                Ok(fn_) if fn_.is_finite() && fn_ <= f + opts.armijo * step * slope => {
                    accepted = true;
                    let mut s = vec![0.0; n];
                    let mut yv = vec![0.0; n];
                    for k in 0..n {
                        s[k] = x_new[k] - x[k];
                        yv[k] = g_new[k] - g[k];
                    }
                    let sy = dot(&s, &yv);
                    if sy > 1e-12 * libm::sqrt(dot(&s, &s) * dot(&yv, &yv)) {
                        if s_hist.len() == m {
                            s_hist.remove(0);
                            y_hist.remove(0);
                            rho_hist.remove(0);
                        }
                        s_hist.push(s);
                        y_hist.push(yv);
                        rho_hist.push(1.0 / sy);
                    }
                    core::mem::swap(&mut x, &mut x_new);
                    core::mem::swap(&mut g, &mut g_new);
                    f = fn_;
                    break;
                }
                Ok(fn_) => {
                    if fn_.is_finite() && sys.model.chi().is_some() && sys.chi_violations(&ev.y) > 0
                    {
                        report.chi_rejections += 1;
                    }
                    step *= 0.5;
                }
                Err(Error::CoincidentAtoms(..)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            if s_hist.is_empty() {
                stop = StopReason::LineSearchFailed;
                break;
            }
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }
        iter += 1;
        if opts.record_trace {
            report.trace.push(f);
        }
        if iter % STALL_WINDOW == 0 {
            if window_start - f <= 1e-14 * libm::fabs(f) {
                stop = StopReason::Stalled;
                break;
            }
            window_start = f;
        }
    }
    if iter >= opts.max_iterations && inf_norm(&g) <= tol {
        stop = StopReason::Converged;
    }
    for (k, &idx) in ev.free.iter().enumerate() {
        ev.y[idx] = x[k];
    }
    report.final_energy = f;
    report.iterations = iter;
    report.gradient_norm = inf_norm(&g);
    report.stop = stop;
    Ok((report, ev.y))
}

/// One row of an ε-refinement sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepRow {
    pub epsilon: f64,
    pub a: f64,
    pub a_eps: f64,
    pub atoms: usize,
    pub best_energy: f64,
    pub best_start: String,
    pub predicted: f64,
    /// `best_energy / predicted`; absent when the prediction is zero.
    pub ratio: Option<f64>,
    /// Filled in by callers that time the run.
    pub wall_time_s: Option<f64>,
}

/// Rows in order of decreasing ε.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

/// Inputs shared by every point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepSetup<'a> {
    pub basis: &'a BravaisBasis,
    pub model: &'a CellEnergyModel,
    pub elastic: &'a ElasticConstants,
    pub fracture: &'a FractureConstants,
    pub law: &'a CleavageLaw,
    pub domain: DomainBox,
    pub variant: BoundaryVariant,
    pub kinds: StartKinds,
    pub options: MinimizeOptions,
}

/// Minimizes at spacing `epsilon` and load `a_ε = a√ε`.
pub fn sweep_point(setup: &SweepSetup<'_>, a: f64, epsilon: f64) -> Result<SweepRow> {
    let mut domain = setup.domain.clone();
    domain.epsilon = epsilon;
    let lat = LatticeInstance::build(setup.basis, &domain)?;
    let a_eps = a * libm::sqrt(epsilon);
    let starts = default_starts(
        &lat,
        setup.elastic,
        setup.fracture,
        a_eps,
        setup.variant,
        setup.kinds,
    );
    if starts.is_empty() {
        return Err(Error::InvalidPlane("no start fits the domain".into()));
    }
    let rep = minimize(
        &lat,
        setup.model,
        a_eps,
        setup.variant,
        &starts,
        &setup.options,
    )?;
    let predicted = setup.law.energy(a);
    Ok(SweepRow {
        epsilon,
        a,
        a_eps,
        atoms: lat.atom_count(),
        best_energy: rep.best_energy,
        best_start: rep.best_start,
        predicted,
        ratio: (predicted > 0.0).then(|| rep.best_energy / predicted),
        wall_time_s: None,
    })
}

/// Runs [`sweep_point`] for each spacing; `eps` must be strictly decreasing.
pub fn epsilon_sweep(setup: &SweepSetup<'_>, a: f64, eps: &[f64]) -> Result<SweepTable> {
    check_schedule(eps)?;
    let rows = eps
        .iter()
        .map(|&e| sweep_point(setup, a, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}

/// Rejects empty, nonpositive or non-decreasing spacing schedules.
pub fn check_schedule(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("spacings must be positive".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "spacings must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Preset;
    use crate::potentials::total_energy;
    use approx::assert_relative_eq;

    fn lattice(preset: Preset, lengths: Vec<f64>, eps: f64) -> LatticeInstance {
        let b = BravaisBasis::preset(preset, &[0.0]).unwrap();
        LatticeInstance::build(&b, &DomainBox::new(lengths, eps)).unwrap()
    }

    #[test]
    fn bond_sum_equals_cell_sum() {
        let lat = lattice(Preset::Triangular, vec![3.0, 1.0], 0.2);
        let m = CellEnergyModel::triangular(0.0, 1.0, 1.0).unwrap();
        let sys = BondSystem::new(&lat, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = lat
            .positions()
            .iter()
            .map(|x| x * 1.03 + 0.01 * (rng.gen::<f64>() - 0.5))
            .collect();
        assert_relative_eq!(
            sys.energy(&y),
            total_energy(&lat, &y, &m).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_load_minimum_is_zero() {
        let lat = lattice(Preset::Square, vec![2.0, 1.0], 0.25);
        let m = CellEnergyModel::square(0.0, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let start = Start {
            label: "identity".into(),
            config: Configuration::reference(&lat, BoundaryVariant::Bc1, 0.0),
        };
        let rep = minimize(
            &lat,
            &m,
            0.0,
            BoundaryVariant::Bc1,
            &[start],
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!(rep.best_energy <= 1e-12);
    }

    #[test]
    fn relaxation_keeps_clamps_and_lowers_energy() {
        let lat = lattice(Preset::Square, vec![2.0, 1.0], 0.25);
        let m = CellEnergyModel::square(0.0, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let a_eps = 0.05;
        let mut conf = Configuration::reference(&lat, BoundaryVariant::Bc1, a_eps);
        conf.enforce_boundary(&lat);
        let start = Start {
            label: "custom".into(),
            config: conf,
        };
        let opts = MinimizeOptions {
            record_trace: true,
            ..MinimizeOptions::default()
        };
        let rep = minimize(&lat, &m, a_eps, BoundaryVariant::Bc1, &[start], &opts).unwrap();
        let s = &rep.starts[0];
        assert!(s.final_energy < s.initial_energy);
        for w in s.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-14 * (1.0 + libm::fabs(w[0])));
        }
        let d = lat.dim();
        for i in 0..lat.atom_count() {
            if let Some(t) = BoundaryVariant::Bc1.target(&lat, i, a_eps) {
                assert_eq!(rep.best_configuration[i * d].to_bits(), t.to_bits());
            }
        }
    }

    #[test]
    fn schedule_must_decrease() {
        assert!(check_schedule(&[0.1, 0.2]).is_err());
        assert!(check_schedule(&[]).is_err());
        assert!(check_schedule(&[0.2, 0.1]).is_ok());
    }
}
