use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hypershift::criterion::{ConstructOptions, CriterionOptions, DenseSequence, GammaSequence, GammaSpec};
use hypershift::families::{generate_schedules, ScheduleFamily};
use hypershift::operators::{preset, Operator, PresetParams};
use hypershift::spaces::{DirectSumVector, IndexDomain, LogScalar, SparseVector, Vector};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub type Triples = Vec<(i64, f64, f64)>;

/// Reads a TOML config; relative paths inside it resolve against its directory.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<(T, PathBuf)> {
    match path {
        None => Ok((T::default(), PathBuf::from("."))),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let cfg = toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((cfg, base))
        }
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub preset: Option<String>,
    #[serde(default)]
    pub params: PresetParams,
    /// Full operator description, instead of a preset.
    pub spec: Option<Operator>,
    #[serde(default)]
    pub direct_sum: bool,
}

impl OperatorConfig {
    pub fn build(&self) -> Result<Operator> {
        let op = match (&self.preset, &self.spec) {
            (Some(name), None) => preset(name, &self.params)?,
            (None, Some(op)) => {
                op.validate()?;
                op.clone()
            }
            (None, None) => bail!("operator needs `preset` or `spec`"),
            (Some(_), Some(_)) => bail!("operator takes `preset` or `spec`, not both"),
        };
        Ok(if self.direct_sum { op.with_identity()? } else { op })
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// How the scalars `alpha_n` (with `gamma_n = 1/alpha_n`) are produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceConfig {
    /// `alpha_n = alpha0 * delta^n`.
    Geometric {
        #[serde(default = "one")]
        alpha0: Complex64,
        delta: f64,
    },
    /// Witnesses chosen in `gamma` for a pseudo-shift.
    Witnesses { gamma: GammaSpec },
    Explicit { alphas: Vec<Complex64> },
}

impl SequenceConfig {
    pub fn build(&self, op: &Operator, len: usize) -> Result<GammaSequence> {
        Ok(match self {
            SequenceConfig::Geometric { alpha0, delta } => {
                GammaSequence::geometric(LogScalar::from_complex(*alpha0), *delta, len)?
            }
            SequenceConfig::Witnesses { gamma } => {
                let shift = op
                    .as_pseudo_shift()
                    .context("witness sequences need a unilateral pseudo-shift operator")?;
                hypershift::criterion::select_gamma_witnesses(gamma, shift, len)?.sequence
            }
            SequenceConfig::Explicit { alphas } => {
                if alphas.len() < len {
                    bail!("explicit sequence has {} scalars, {len} needed", alphas.len());
                }
                GammaSequence::new(alphas.iter().map(|&a| LogScalar::from_complex(a)).collect())?
            }
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub k: Option<usize>,
    pub base_density: Option<f64>,
    /// A schedule document written by `hypershift schedules`.
    pub file: Option<PathBuf>,
}

impl ScheduleConfig {
    pub fn load_file(&self, base: &Path) -> Result<Option<ScheduleFamily>> {
        let Some(f) = &self.file else { return Ok(None) };
        let path = resolve(base, f);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let fam = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text)?
        } else {
            serde_json::from_str(&text)?
        };
        Ok(Some(fam))
    }

    pub fn generate(&self, horizon: u64) -> hypershift::Result<ScheduleFamily> {
        generate_schedules(self.k.unwrap_or(6), horizon, self.base_density.unwrap_or(0.25))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructSpec {
    pub sequence: SequenceConfig,
    pub levels: usize,
    #[serde(default)]
    pub schedules: ScheduleConfig,
    pub dense: DenseSequence,
    #[serde(default)]
    pub options: ConstructOptions,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitiesConfig {
    pub set_file: Option<PathBuf>,
    pub horizon: Option<u64>,
    pub window: Option<u64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulesConfig {
    pub k: Option<usize>,
    pub base_density: Option<f64>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionConfig {
    pub operator: OperatorConfig,
    pub sequence: Option<SequenceConfig>,
    #[serde(default)]
    pub targets: Vec<Triples>,
    #[serde(default)]
    pub options: CriterionOptions,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructConfig {
    pub operator: OperatorConfig,
    pub construct: Option<ConstructSpec>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartConfig {
    pub vector: Option<Triples>,
    /// Second coordinate for operators of the form `T (+) Id`.
    pub lambda: Option<Complex64>,
    pub construct: Option<ConstructSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub operator: OperatorConfig,
    pub gamma: Option<GammaSpec>,
    pub start: Option<StartConfig>,
    #[serde(default)]
    pub targets: Vec<Triples>,
    /// Second coordinates of the targets for `T (+) Id` (default 1).
    #[serde(default)]
    pub target_lambdas: Vec<Complex64>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub operator: OperatorConfig,
    /// Number of terms summed (default 10^6).
    pub terms: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    pub gamma: Option<GammaSpec>,
    /// Sample size for sampled diagnostics (default 1000).
    pub budget: Option<usize>,
    pub cover_delta: Option<f64>,
    /// Random draws used to verify the cover (default 10^4).
    pub cover_checks: Option<usize>,
    pub series: Option<SeriesConfig>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
}

pub fn sparse(domain: IndexDomain, t: &Triples) -> Result<SparseVector> {
    Ok(SparseVector::from_triples(domain, t)?)
}

/// A config vector placed in the space of `op`.
pub fn vector(op: &Operator, t: &Triples, lambda: Option<Complex64>) -> Result<Vector> {
    let x = sparse(op.domain(), t)?;
    Ok(match (op.space().is_direct_sum(), lambda) {
        (true, l) => DirectSumVector::new(x, l.unwrap_or_else(one)).into(),
        (false, None) => x.into(),
        (false, Some(_)) => bail!("`lambda` only applies to direct-sum operators"),
    })
}
