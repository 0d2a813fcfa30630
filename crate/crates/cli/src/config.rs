//! Run configuration: JSON on disk, then command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use holo_lab::factorization::{FactorParams, DEFAULT_T_LIST};
use holo_lab::herglotz::SamplingParams;
use holo_lab::rigidity::Verdict;
use holo_lab::shift::{QuadratureSpec, SymbolSampling};
use holo_lab::DiscGrid;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RigidityCheck,
    FactorizeVerify,
    RecoverParams,
    HerglotzAnalyze,
    ShiftSim,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::RigidityCheck => "rigidity-check",
            Command::FactorizeVerify => "factorize-verify",
            Command::RecoverParams => "recover-params",
            Command::HerglotzAnalyze => "herglotz-analyze",
            Command::ShiftSim => "shift-sim",
        }
    }

    /// Tolerance names the command understands and their defaults.
    pub fn default_tolerances(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Command::RigidityCheck => &[("eps_holo", 1e-6), ("eps_const", 1e-8), ("strip", 1e-12)],
            Command::FactorizeVerify => &[
                ("master", 1e-10),
                ("product", 1e-8),
                ("commutation", 1e-8),
                ("contractivity", 1e-8),
                ("semigroup", 1e-8),
            ],
            Command::RecoverParams => &[("recover", 1e-10)],
            Command::HerglotzAnalyze => &[("atom", 5e-2)],
            Command::ShiftSim => &[
                ("conjugation", 1e-6),
                ("upper", 1e-8),
                ("isometry", 5e-3),
                ("coefficient_semigroup", 1e-10),
                ("truncated", 1e-8),
            ],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

/// Where `(A, B)` comes from. Exactly one field must be set.
#[derive(Debug, Clone, Copy)]
pub struct ParamsSource<'a> {
    pub params: Option<&'a FactorParams>,
    pub params_path: Option<&'a Path>,
    pub random_dim: Option<usize>,
}

macro_rules! params_source {
    ($($t:ty),*) => {$(
        impl $t {
            pub fn source(&self) -> ParamsSource<'_> {
                ParamsSource {
                    params: self.params.as_ref(),
                    params_path: self.params_path.as_deref(),
                    random_dim: self.random_dim,
                }
            }
        }
    )*};
}

params_source!(FactorizationInput, HerglotzInput, ShiftInput);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    /// Registry id: `const:re,im`, `linear`, `re-plus-half`, `abs-shift`.
    pub id: String,
    /// Overrides the registry's expected verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Verdict>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConstants {
    pub count: usize,
    pub max_dim: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidityInput {
    #[serde(default)]
    pub functions: Vec<FunctionSpec>,
    /// Constants `F ≡ C` with `Re C` a random positive contraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_constants: Option<RandomConstants>,
}

fn default_t_list() -> Vec<f64> {
    DEFAULT_T_LIST.to_vec()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FactorParams>,
    /// JSON file with `{dim, A, B}`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params_path: Option<PathBuf>,
    /// Draw random parameters of this dimension from the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_dim: Option<usize>,
    #[serde(default = "default_t_list")]
    pub t_list: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HerglotzInput {
    /// `h = iA + φB`; `A = 0, B = I` gives `h = φ·I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FactorParams>,
    /// JSON file with `{dim, A, B}`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params_path: Option<PathBuf>,
    /// Draw random parameters of this dimension from the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_dim: Option<usize>,
    #[serde(default)]
    pub sampling: SamplingParams,
    /// Also analyze `h ≡ I`, which must not look concentrated.
    #[serde(default)]
    pub diffuse_control: bool,
}

fn default_shift_t() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_order() -> usize {
    32
}

fn default_n_check() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftInput {
    #[serde(default = "default_shift_t")]
    pub t_list: Vec<f64>,
    /// Truncation order of the Toeplitz checks.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_n_check")]
    pub n_check: usize,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub sampling: SymbolSampling,
    /// Optional `(A, B)` for the block-Toeplitz factorization check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FactorParams>,
    /// JSON file with `{dim, A, B}`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params_path: Option<PathBuf>,
    /// Draw random parameters of this dimension from the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<DiscGrid>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigidity: Option<RigidityInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factorization: Option<FactorizationInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herglotz: Option<HerglotzInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftInput>,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_radii: Option<Vec<f64>>,
    pub tolerances: Vec<(String, f64)>,
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if let Some(radii) = &o.grid_radii {
            self.grid = Some(self.grid_or_default().with_radii(radii.clone())?);
        }
        for (name, value) in &o.tolerances {
            self.tolerances.insert(name.clone(), *value);
        }
        Ok(())
    }

    pub fn grid_or_default(&self) -> DiscGrid {
        self.grid.clone().unwrap_or_default()
    }

    /// Checks everything that can be checked without running a suite.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        let known = self.command.default_tolerances();
        for (name, value) in &self.tolerances {
            if !known.contains_key(name) {
                let names: Vec<&str> = known.keys().map(String::as_str).collect();
                return Err(CliError::Invalid(format!(
                    "unknown tolerance '{name}' for {}; expected one of {}",
                    self.command.as_str(),
                    names.join(", ")
                )));
            }
            if !(value.is_finite() && *value > 0.0) {
                return Err(CliError::Invalid(format!("tolerance {name} = {value} must be finite and > 0")));
            }
        }
        let sections = [
            ("rigidity", self.rigidity.is_some(), Command::RigidityCheck),
            ("factorization", self.factorization.is_some(), Command::FactorizeVerify),
            ("herglotz", self.herglotz.is_some(), Command::HerglotzAnalyze),
            ("shift", self.shift.is_some(), Command::ShiftSim),
        ];
        for (name, present, owner) in sections {
            let allowed = owner == self.command || (name == "factorization" && self.command == Command::RecoverParams);
            if present && !allowed {
                return Err(CliError::Invalid(format!(
                    "section '{name}' does not apply to {}",
                    self.command.as_str()
                )));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .unwrap_or_else(|| self.command.default_tolerances()[name])
    }

    /// Seed for randomized suites; mandatory there.
    pub fn require_seed(&self, what: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Invalid(format!("{what} is randomized and needs a seed (config 'seed' or --seed)")))
    }
}

impl ParamsSource<'_> {
    pub fn is_empty(&self) -> bool {
        self.params.is_none() && self.params_path.is_none() && self.random_dim.is_none()
    }

    pub fn resolve(&self, cfg: &RunConfig) -> Result<FactorParams, CliError> {
        match (self.params, self.params_path, self.random_dim) {
            (Some(p), None, None) => Ok(p.clone()),
            (None, Some(path), None) => {
                let full = cfg.base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::Invalid(format!("cannot read params {}: {e}", full.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("params {}: {e}", full.display())))
            }
            (None, None, Some(d)) => {
                if d == 0 {
                    return Err(CliError::Invalid("random_dim must be >= 1".into()));
                }
                let seed = cfg.require_seed("random_dim")?;
                Ok(FactorParams::random(d, &mut holo_lab::random::rng(seed)))
            }
            _ => Err(CliError::Invalid("give exactly one of params, params_path, random_dim".into())),
        }
    }
}

/// Parses `NAME=VALUE`.
pub fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("tolerance '{name}': '{value}' is not a number"))?;
    Ok((name.trim().to_string(), value))
}
