//! The five commands: constants, predict, energy, minimize, sweep.

use std::time::Instant;

use cleavelab_core::cleavage::{
    count_broken_bonds, crack_energy_limit, cracked_config, elastic_config, BoundaryVariant,
    CrackPlane,
};
use cleavelab_core::fracture::{beta_a, min_length, DEFAULT_LENGTH_SAFETY};
use cleavelab_core::potentials::total_energy;
use cleavelab_core::simulate::{
    default_starts, minimize, sweep_point, MinimizeReport, StartKinds, SweepRow, SweepSetup,
};
use cleavelab_core::{
    BravaisBasis, CellEnergyModel, CleavageLaw, DirectionSets, ElasticConstants, FractureConstants,
    LatticeInstance, Mat, NormalSet,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::fmt12;
use crate::CliError;

/// Everything derived from a config before any lattice is built.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub basis: BravaisBasis,
    pub model: CellEnergyModel,
    pub elastic: ElasticConstants,
    pub fracture: FractureConstants,
    pub law: CleavageLaw,
}

impl Analysis {
    pub fn new(cfg: &RunConfig, seed: u64) -> Result<Self, CliError> {
        let basis = cfg.basis()?;
        let model = cfg.model(&basis)?;
        let elastic = ElasticConstants::compute(&model)?;
        let normals = NormalSet::new(&DirectionSets::new(&basis));
        let fracture = beta_a(model.bond_betas(), &normals, seed)?;
        let provenance = format!(
            "{} lattice, angles {:?}",
            basis.preset_kind().name(),
            basis.angles()
        );
        let law = CleavageLaw::new(
            elastic.alpha_a,
            fracture.beta_a,
            basis.det(),
            &cfg.lattice.lengths,
            provenance,
        )?;
        Ok(Analysis {
            basis,
            model,
            elastic,
            fracture,
            law,
        })
    }
}

fn rows_of(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDescription {
    pub dimension: usize,
    pub preset: String,
    pub angles: Vec<f64>,
    /// Row-major.
    pub basis: Vec<f64>,
    pub epsilon: Option<f64>,
    pub lengths: Vec<f64>,
    pub shift: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondBetaEntry {
    pub coeffs: Vec<i8>,
    pub vector: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsChecks {
    pub null_space_residual: f64,
    pub formula_agreement: f64,
    pub min_eigenvalue: f64,
    pub sampled_min_ratio: f64,
    pub sampled_min_surplus: f64,
    /// Largest `|ξ·e₁|` among the optimal normals, against `M₁/M₂`.
    pub best_cross_section: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub lattice: LatticeDescription,
    /// Strain coordinates: diagonal entries, then √2 times the off-diagonal ones.
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "alpha_A")]
    pub alpha_a: f64,
    #[serde(rename = "F_bar_unit")]
    pub f_bar_unit: Vec<Vec<f64>>,
    #[serde(rename = "beta_A")]
    pub beta_a: f64,
    pub optimal_normals: Vec<Vec<f64>>,
    pub degenerate_continuum: bool,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "L")]
    pub min_length: Option<f64>,
    /// `l₁ < L`: the specimen may be too short for the optimal plane.
    pub short_specimen_warning: bool,
    pub a_crit: f64,
    pub prefactor: f64,
    pub l1: f64,
    pub bond_betas: Vec<BondBetaEntry>,
    pub checks: ConstantsChecks,
    pub seed: u64,
}

pub fn constants(cfg: &RunConfig, seed: u64) -> Result<(ConstantsReport, Analysis), CliError> {
    let an = Analysis::new(cfg, seed)?;
    let lengths = &cfg.lattice.lengths;
    let safety = cfg.run.length_safety.unwrap_or(DEFAULT_LENGTH_SAFETY);
    let min_len = min_length(an.fracture.m1, an.fracture.m2, &lengths[1..], safety).ok();
    let shift = match cfg.shift() {
        cleavelab_core::Shift::Centered => "centered".to_string(),
        cleavelab_core::Shift::CellCenter => "cell_center".to_string(),
        cleavelab_core::Shift::Explicit(v) => format!("{v:?}"),
    };
    let report = ConstantsReport {
        lattice: LatticeDescription {
            dimension: an.basis.dim(),
            preset: an.basis.preset_kind().name().to_string(),
            angles: an.basis.angles().to_vec(),
            basis: an.basis.matrix().as_slice().to_vec(),
            epsilon: cfg.lattice.epsilon,
            lengths: lengths.clone(),
            shift,
        },
        q: rows_of(&an.elastic.q),
        alpha_a: an.elastic.alpha_a,
        f_bar_unit: rows_of(&an.elastic.f_bar_unit),
        beta_a: an.fracture.beta_a,
        optimal_normals: an.fracture.optimal.iter().map(|n| n.xi.clone()).collect(),
        degenerate_continuum: an.fracture.degenerate_continuum,
        m1: an.fracture.m1,
        m2: an.fracture.m2,
        min_length: min_len,
        short_specimen_warning: min_len.is_some_and(|l| lengths[0] < l),
        a_crit: an.law.a_crit,
        prefactor: an.law.prefactor,
        l1: an.law.l1,
        bond_betas: an
            .model
            .bond_betas()
            .iter()
            .map(|b| BondBetaEntry {
                coeffs: b.direction.coeffs.clone(),
                vector: b.direction.vector.clone(),
                beta: b.beta,
            })
            .collect(),
        checks: ConstantsChecks {
            null_space_residual: an.elastic.null_space_residual,
            formula_agreement: an.elastic.formula_agreement(),
            min_eigenvalue: an.elastic.eigenvalues[0],
            sampled_min_ratio: an.fracture.sampled_min_ratio,
            sampled_min_surplus: an.fracture.sampled_min_surplus,
            best_cross_section: an.fracture.best_cross_section(),
        },
        seed,
    };
    Ok((report, an))
}

/// The law exactly as a saved constants report would reproduce it, so both
/// prediction paths print the same curve.
pub fn law_as_reported(cfg: &RunConfig, seed: u64) -> Result<CleavageLaw, CliError> {
    let (report, _) = constants(cfg, seed)?;
    let text = crate::output::to_json(&report)?;
    let reread: ConstantsReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Numerical(format!("cannot reread constants report: {e}")))?;
    law_from_report(&reread)
}

/// Rebuilds the law from an emitted constants report.
pub fn law_from_report(r: &ConstantsReport) -> Result<CleavageLaw, CliError> {
    let transverse: f64 = r.lattice.lengths[1..].iter().product();
    let det_a = transverse / r.prefactor;
    let mut law = CleavageLaw::new(
        r.alpha_a,
        r.beta_a,
        det_a,
        &r.lattice.lengths,
        String::from("constants report"),
    )?;
    law.prefactor = r.prefactor;
    law.a_crit = r.a_crit;
    Ok(law)
}

pub fn predict(law: &CleavageLaw, grid: &[f64]) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = grid
        .iter()
        .map(|&a| {
            vec![
                fmt12(a),
                fmt12(law.energy(a)),
                law.branch(a).name().to_string(),
            ]
        })
        .collect();
    crate::output::to_csv(&["a", "E_lim", "branch"], &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Elastic,
    Cracked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokenBondEntry {
    pub coeffs: Vec<i8>,
    pub count: usize,
    pub expected: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub which: String,
    pub epsilon: f64,
    pub a_eps: f64,
    pub atoms: usize,
    pub cells: usize,
    pub energy: f64,
    pub limit: f64,
    pub ratio: Option<f64>,
    pub boundary_variant: String,
    pub boundary_residual: f64,
    /// Crack normal and offset, for the cracked configuration.
    pub plane: Option<(Vec<f64>, f64)>,
    /// Norm of the skew part added to clear the first row of `F̄`.
    pub skew_correction: Option<f64>,
    pub broken_bonds: Vec<BrokenBondEntry>,
}

pub struct EnergyRequest {
    pub which: Which,
    pub a_eps: f64,
    pub epsilon: f64,
    pub xi: Option<Vec<f64>>,
    pub offset: Option<f64>,
}

pub fn energy(
    cfg: &RunConfig,
    an: &Analysis,
    req: &EnergyRequest,
) -> Result<EnergyReport, CliError> {
    let lat = LatticeInstance::build(&an.basis, &cfg.domain(req.epsilon))?;
    let a = req.a_eps / req.epsilon.sqrt();
    match req.which {
        Which::Elastic => {
            let (conf, skew) = elastic_config(&lat, req.a_eps, &an.elastic.f_bar_unit);
            let e = total_energy(&lat, &conf.y, &an.model)?;
            let limit = an.law.elastic_energy(a);
            Ok(EnergyReport {
                which: "elastic".into(),
                epsilon: req.epsilon,
                a_eps: req.a_eps,
                atoms: lat.atom_count(),
                cells: lat.cell_count(),
                energy: e,
                limit,
                ratio: (limit > 0.0).then(|| e / limit),
                boundary_variant: conf.variant.name().into(),
                boundary_residual: conf.boundary_residual(&lat),
                plane: None,
                skew_correction: Some(skew),
                broken_bonds: Vec::new(),
            })
        }
        Which::Cracked => {
            let xi = match &req.xi {
                Some(x) => x.clone(),
                None => an.fracture.optimal[0].xi.clone(),
            };
            let plane = CrackPlane::new(&lat, &xi, req.offset)?;
            let conf = cracked_config(&lat, &plane, req.a_eps, BoundaryVariant::Bc2);
            let e = total_energy(&lat, &conf.y, &an.model)?;
            let limit = crack_energy_limit(
                an.model.bond_betas(),
                &plane.xi,
                &cfg.lattice.lengths,
                an.basis.det(),
            )?;
            let broken = count_broken_bonds(&lat, &an.model, &plane)
                .into_iter()
                .map(|b| BrokenBondEntry {
                    coeffs: b.direction.coeffs,
                    count: b.count,
                    expected: b.expected,
                    ratio: b.ratio,
                })
                .collect();
            Ok(EnergyReport {
                which: "cracked".into(),
                epsilon: req.epsilon,
                a_eps: req.a_eps,
                atoms: lat.atom_count(),
                cells: lat.cell_count(),
                energy: e,
                limit,
                ratio: Some(e / limit),
                boundary_variant: conf.variant.name().into(),
                boundary_residual: conf.boundary_residual(&lat),
                plane: Some((plane.xi.clone(), plane.offset)),
                skew_correction: None,
                broken_bonds: broken,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOutput {
    pub epsilon: f64,
    pub a: f64,
    pub a_eps: f64,
    pub boundary_variant: String,
    pub atoms: usize,
    pub predicted: f64,
    pub ratio: Option<f64>,
    pub report: MinimizeReport,
}

pub struct MinimizeRequest {
    pub a: f64,
    pub epsilon: f64,
    pub variant: BoundaryVariant,
    pub kinds: StartKinds,
    pub seed: u64,
}

pub fn run_minimize(
    cfg: &RunConfig,
    an: &Analysis,
    req: &MinimizeRequest,
) -> Result<MinimizeOutput, CliError> {
    let lat = LatticeInstance::build(&an.basis, &cfg.domain(req.epsilon))?;
    let a_eps = req.a * req.epsilon.sqrt();
    let starts = default_starts(
        &lat,
        &an.elastic,
        &an.fracture,
        a_eps,
        req.variant,
        req.kinds,
    );
    if starts.is_empty() {
        return Err(CliError::Config(
            "no requested start fits the domain".into(),
        ));
    }
    let report = minimize(
        &lat,
        &an.model,
        a_eps,
        req.variant,
        &starts,
        &cfg.minimize_options(req.seed),
    )?;
    if !report.best_energy.is_finite() {
        return Err(CliError::Numerical("energy diverged".into()));
    }
    let predicted = an.law.energy(req.a);
    Ok(MinimizeOutput {
        epsilon: req.epsilon,
        a: req.a,
        a_eps,
        boundary_variant: req.variant.name().into(),
        atoms: lat.atom_count(),
        predicted,
        ratio: (predicted > 0.0).then(|| report.best_energy / predicted),
        report,
    })
}

pub struct SweepRequest {
    pub a: f64,
    pub eps: Vec<f64>,
    pub variant: BoundaryVariant,
    pub kinds: StartKinds,
    pub seed: u64,
    /// Adds a wall-time column; the output is then no longer reproducible.
    pub timing: bool,
}

/// Sweep points run in parallel; rows come back in schedule order.
pub fn sweep(
    cfg: &RunConfig,
    an: &Analysis,
    req: &SweepRequest,
) -> Result<Vec<SweepRow>, CliError> {
    cleavelab_core::simulate::check_schedule(&req.eps)?;
    let setup = SweepSetup {
        basis: &an.basis,
        model: &an.model,
        elastic: &an.elastic,
        fracture: &an.fracture,
        law: &an.law,
        domain: cfg.domain(req.eps[0]),
        variant: req.variant,
        kinds: req.kinds,
        options: cfg.minimize_options(req.seed),
    };
    req.eps
        .par_iter()
        .map(|&e| {
            let t0 = Instant::now();
            let mut row = sweep_point(&setup, req.a, e)?;
            if req.timing {
                row.wall_time_s = Some(t0.elapsed().as_secs_f64());
            }
            Ok(row)
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow], timing: bool) -> Result<String, CliError> {
    let mut header = vec![
        "epsilon",
        "a",
        "a_eps",
        "atoms",
        "best_energy",
        "best_start",
        "predicted",
        "ratio",
    ];
    if timing {
        header.push("wall_time_s");
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                fmt12(r.epsilon),
                fmt12(r.a),
                fmt12(r.a_eps),
                r.atoms.to_string(),
                fmt12(r.best_energy),
                r.best_start.clone(),
                fmt12(r.predicted),
                r.ratio.map(fmt12).unwrap_or_default(),
            ];
            if timing {
                v.push(r.wall_time_s.map(fmt12).unwrap_or_default());
            }
            v
        })
        .collect();
    crate::output::to_csv(&header, &body)
}
