//! Run configuration: the JSON schema and its translation into core types.

use std::path::Path;

use cleavelab_core::cleavage::BoundaryVariant;
use cleavelab_core::potentials::{Chi, PairPotential, Shell, ShellClass};
use cleavelab_core::simulate::{MinimizeOptions, StartKinds};
use cleavelab_core::{BravaisBasis, CellEnergyModel, DomainBox, Mat, Preset, Shift};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeBlock,
    pub model: ModelBlock,
    #[serde(default)]
    pub run: RunBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    Triangular,
    Square,
    Cubic,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    pub preset: PresetName,
    #[serde(default)]
    pub angles: Vec<f64>,
    /// Row-major basis matrix, required for `custom`.
    #[serde(default)]
    pub basis: Option<Vec<f64>>,
    pub lengths: Vec<f64>,
    /// Default spacing for `energy` and `minimize`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub shift: Option<ShiftSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftSpec {
    Named(ShiftName),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftName {
    Centered,
    CellCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub shells: Vec<ShellSpec>,
    #[serde(default)]
    pub chi: Option<ChiSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSpec {
    Named(ClassName),
    Length(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassName {
    Nn,
    Nnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FormName {
    #[default]
    Morse,
    #[serde(alias = "lj")]
    LennardJones,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub class: ClassSpec,
    #[serde(default)]
    pub form: FormName,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Knot radii of a tabulated potential.
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    /// Knot values of a tabulated potential.
    #[serde(default)]
    pub w: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiSpec {
    #[serde(default, rename = "R")]
    pub radius: Option<f64>,
    #[serde(default)]
    pub penalty: Option<f64>,
    #[serde(default = "yes")]
    pub enabled: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub a_grid: Option<String>,
    #[serde(default)]
    pub bc: Option<BoundaryVariant>,
    /// Spacing schedule, numbers or expressions like `"l1/16"`.
    #[serde(default)]
    pub eps: Option<Vec<EpsSpec>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub perturbation: Option<f64>,
    #[serde(default)]
    pub starts: Option<Vec<String>>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub gradient_tolerance: Option<f64>,
    #[serde(default)]
    pub length_safety: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Value(f64),
    Expr(String),
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        for (j, &l) in self.lattice.lengths.iter().enumerate() {
            positive(&format!("lattice.lengths[{j}]"), l)?;
        }
        if let Some(e) = self.lattice.epsilon {
            positive("lattice.epsilon", e)?;
        }
        if self.model.shells.is_empty() {
            return Err(CliError::Config("model.shells must not be empty".into()));
        }
        for (k, s) in self.model.shells.iter().enumerate() {
            for (name, v) in [("alpha", s.alpha), ("beta", s.beta)] {
                if let Some(v) = v {
                    positive(&format!("model.shells[{k}].{name}"), v)?;
                }
            }
        }
        if let Some(a) = self.run.a {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(CliError::Config(format!(
                    "run.a must be nonnegative, got {a}"
                )));
            }
        }
        if let Some(p) = self.run.perturbation {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(CliError::Config(
                    "run.perturbation must be nonnegative".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<BravaisBasis, CliError> {
        let l = &self.lattice;
        let b = match l.preset {
            PresetName::Triangular => BravaisBasis::preset(Preset::Triangular, &l.angles)?,
            PresetName::Square => BravaisBasis::preset(Preset::Square, &l.angles)?,
            PresetName::Cubic => BravaisBasis::preset(Preset::Cubic, &l.angles)?,
            PresetName::Custom => {
                let data = l
                    .basis
                    .clone()
                    .ok_or_else(|| CliError::Config("custom lattice needs lattice.basis".into()))?;
                let d = match data.len() {
                    4 => 2,
                    9 => 3,
                    n => {
                        return Err(CliError::Config(format!(
                            "lattice.basis needs 4 or 9 entries, got {n}"
                        )))
                    }
                };
                BravaisBasis::custom(Mat::from_row_major(d, d, data))?
            }
        };
        if l.preset != PresetName::Custom && l.basis.is_some() {
            return Err(CliError::Config(
                "lattice.basis is only allowed with the custom preset".into(),
            ));
        }
        if l.lengths.len() != b.dim() {
            return Err(CliError::Config(format!(
                "lattice.lengths needs {} entries, got {}",
                b.dim(),
                l.lengths.len()
            )));
        }
        Ok(b)
    }

    pub fn model(&self, basis: &BravaisBasis) -> Result<CellEnergyModel, CliError> {
        let mut shells = Vec::new();
        for (k, s) in self.model.shells.iter().enumerate() {
            let class = match s.class {
                ClassSpec::Named(ClassName::Nn) => ShellClass::Nearest,
                ClassSpec::Named(ClassName::Nnn) => ShellClass::NextNearest,
                ClassSpec::Length(l) => ShellClass::Length(l),
            };
            let need = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| CliError::Config(format!("model.shells[{k}].{name} is required")))
            };
            let potential = match s.form {
                FormName::Morse => {
                    PairPotential::morse(need(s.alpha, "alpha")?, need(s.beta, "beta")?)?
                }
                FormName::LennardJones => {
                    let beta = need(s.beta, "beta")?;
                    PairPotential::lennard_jones(s.alpha.unwrap_or(72.0 * beta), beta)?
                }
                FormName::Table => {
                    let r = s.r.as_deref().ok_or_else(|| {
                        CliError::Config(format!("model.shells[{k}].r is required"))
                    })?;
                    let w = s.w.as_deref().ok_or_else(|| {
                        CliError::Config(format!("model.shells[{k}].w is required"))
                    })?;
                    PairPotential::table(r, w)?
                }
            };
            shells.push(Shell::new(class, potential));
        }
        let model = CellEnergyModel::new(basis, shells)?;
        let chi = match &self.model.chi {
            None => model.chi(),
            Some(c) if !c.enabled => None,
            Some(c) => {
                let default = model.chi().expect("models start with a penalty");
                Some(Chi {
                    radius: c.radius.unwrap_or(default.radius),
                    value: c.penalty.unwrap_or(default.value),
                })
            }
        };
        Ok(model.with_chi(chi)?)
    }

    pub fn shift(&self) -> Shift {
        match &self.lattice.shift {
            None | Some(ShiftSpec::Named(ShiftName::Centered)) => Shift::Centered,
            Some(ShiftSpec::Named(ShiftName::CellCenter)) => Shift::CellCenter,
            Some(ShiftSpec::Explicit(v)) => Shift::Explicit(v.clone()),
        }
    }

    pub fn domain(&self, epsilon: f64) -> DomainBox {
        DomainBox::new(self.lattice.lengths.clone(), epsilon).with_shift(self.shift())
    }

    pub fn l1(&self) -> f64 {
        self.lattice.lengths[0]
    }

    pub fn variant(&self) -> BoundaryVariant {
        self.run.bc.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }

    pub fn start_kinds(&self) -> Result<StartKinds, CliError> {
        match &self.run.starts {
            None => Ok(StartKinds::default()),
            Some(list) => parse_starts(list.iter().map(String::as_str)),
        }
    }

    pub fn minimize_options(&self, seed: u64) -> MinimizeOptions {
        let mut o = MinimizeOptions {
            seed,
            ..MinimizeOptions::default()
        };
        if let Some(m) = self.run.max_iterations {
            o.max_iterations = m;
        }
        o.gradient_tolerance = self.run.gradient_tolerance;
        o.perturbation = self.run.perturbation.unwrap_or(0.0);
        o
    }

    pub fn eps_schedule(&self) -> Option<Result<Vec<f64>, CliError>> {
        self.run.eps.as_ref().map(|list| {
            list.iter()
                .map(|e| match e {
                    EpsSpec::Value(v) => Ok(*v),
                    EpsSpec::Expr(s) => parse_eps(s, self.l1()),
                })
                .collect()
        })
    }
}

pub fn parse_starts<'a>(items: impl Iterator<Item = &'a str>) -> Result<StartKinds, CliError> {
    let mut kinds = StartKinds {
        elastic: false,
        cracked: false,
    };
    for s in items {
        match s.trim() {
            "elastic" => kinds.elastic = true,
            "cracked" => kinds.cracked = true,
            other => return Err(CliError::Config(format!("unknown start '{other}'"))),
        }
    }
    if !(kinds.elastic || kinds.cracked) {
        return Err(CliError::Config("at least one start is required".into()));
    }
    Ok(kinds)
}

/// Parses `0.05`, `l1/16` or `l1*0.1`.
pub fn parse_eps(s: &str, l1: f64) -> Result<f64, CliError> {
    let t = s.trim();
    let bad = || CliError::Config(format!("cannot parse spacing '{s}'"));
    let v = if let Some(rest) = t.strip_prefix("l1/") {
        l1 / rest.trim().parse::<f64>().map_err(|_| bad())?
    } else if let Some(rest) = t.strip_prefix("l1*") {
        l1 * rest.trim().parse::<f64>().map_err(|_| bad())?
    } else if t == "l1" {
        l1
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn parse_eps_list(s: &str, l1: f64) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|p| parse_eps(p, l1)).collect()
}

/// Parses `start:step:end` into the inclusive grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || {
        CliError::Config(format!(
            "a-grid must be start:step:end or a single value, got '{s}'"
        ))
    };
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [v] if v.is_finite() && *v >= 0.0 => Ok(vec![*v]),
        [start, step, end] if *step > 0.0 && end >= start && *start >= 0.0 && end.is_finite() => {
            let n = ((end - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| start + k as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}
