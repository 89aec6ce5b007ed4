//! Experiment configuration: a JSON file whose fields all have defaults,
//! overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thermoflow::coding::{
    build_partition, ConstantFn, ContractionRate, MarkovPartition, Observable, SuspensionSystem, SystemConfig,
    TrigFlowFunction,
};
use thermoflow::{Error, Potential, Result, TransitionMatrix};

/// Inline system description or a path to a system JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSource {
    Path(PathBuf),
    Inline(SystemConfig),
}

/// `"golden-mean"`, `"cat"` (the partition matrix of the system),
/// `"full:K"`, explicit rows, or a path to a plain-text matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Rows(Vec<Vec<u8>>),
    Name(String),
}

/// A constant potential or a path to a `word,value` CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSource {
    Constant(f64),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObservableSpec {
    /// A fixed positive trigonometric function.
    Generic,
    Constant { value: f64 },
    ContractionRate,
    Trig(TrigFlowFunction),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSource,
    pub observable: ObservableSpec,
    pub matrix: MatrixSource,
    /// Potential for `pressure` and `gibbs`; `rho` defaults to `g ≡ 1`.
    pub potential: Option<PotentialSource>,
    /// Word length for `sft`.
    pub word_length: usize,
    /// Truncation `m` of the partition-sum pressure estimate.
    pub partition_sum_length: usize,
    /// Cylinder depth of the exported Gibbs tables.
    pub gibbs_depth: usize,
    pub max_power_iters: usize,
    /// Cylinder depth `k` of `f_A` and the `μ'` tables.
    pub depth: usize,
    /// Cells per leaf segment.
    pub cells: usize,
    pub half_length: f64,
    pub samples: usize,
    /// Largest flow time in the Radon–Nikodym check, in minimal returns.
    pub max_returns: f64,
    pub itinerary_length: usize,
    /// Largest `m` in the telescoping check.
    pub telescoping_max_m: usize,
    /// Leaf segments exported by `realize`.
    pub segments: usize,
    pub grid: usize,
    pub dim: usize,
    pub ks: Vec<usize>,
    pub seed: u64,
    /// Solver tolerance (pressure roots, Poisson residual).
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemSource::Inline(SystemConfig::default()),
            observable: ObservableSpec::Generic,
            matrix: MatrixSource::Name("golden-mean".into()),
            potential: None,
            word_length: 6,
            partition_sum_length: 12,
            gibbs_depth: 4,
            max_power_iters: 500_000,
            depth: 8,
            cells: 1 << 16,
            half_length: 0.08,
            samples: 100,
            max_returns: 3.0,
            itinerary_length: 40,
            telescoping_max_m: 6,
            segments: 4,
            grid: 64,
            dim: 2,
            ks: vec![4, 8, 16],
            seed: 0,
            tol: None,
            out: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads `path`, resolving relative paths inside it against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let SystemSource::Path(p) = &mut cfg.system {
            resolve(p);
        }
        if let Some(PotentialSource::Path(p)) = &mut cfg.potential {
            resolve(p);
        }
        if let MatrixSource::Name(n) = &mut cfg.matrix {
            if !is_named_matrix(n) && Path::new(n.as_str()).is_relative() {
                *n = dir.join(n.as_str()).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("word_length", self.word_length),
            ("partition_sum_length", self.partition_sum_length),
            ("gibbs_depth", self.gibbs_depth),
            ("max_power_iters", self.max_power_iters),
            ("depth", self.depth),
            ("cells", self.cells),
            ("samples", self.samples),
            ("itinerary_length", self.itinerary_length),
            ("segments", self.segments),
            ("grid", self.grid),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Parameter(format!("tol {t} must be positive")));
            }
        }
        if !(self.half_length > 0.0) || !(self.max_returns > 0.0) {
            return Err(Error::Parameter("half_length and max_returns must be positive".into()));
        }
        if !(self.dim == 2 || self.dim == 3) {
            return Err(Error::Parameter(format!("dim {} must be 2 or 3", self.dim)));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Parameter("ks must be nonempty and positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Parameter("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn system_config(&self) -> Result<SystemConfig> {
        match &self.system {
            SystemSource::Inline(c) => Ok(c.clone()),
            SystemSource::Path(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        }
    }

    pub fn system(&self) -> Result<SuspensionSystem> {
        SuspensionSystem::new(self.system_config()?)
    }

    pub fn partition(&self, sys: &SuspensionSystem) -> Result<MarkovPartition> {
        build_partition(&sys.base, sys.config.refinement_level, sys.config.radii)
    }

    pub fn observable(&self) -> Result<Box<dyn Observable>> {
        Ok(match &self.observable {
            ObservableSpec::Generic => Box::new(TrigFlowFunction::generic()),
            ObservableSpec::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(Error::Parameter(format!("constant observable {value} must be positive")));
                }
                Box::new(ConstantFn(*value))
            }
            ObservableSpec::ContractionRate => Box::new(ContractionRate),
            ObservableSpec::Trig(f) => {
                if !(f.lower_bound() > 0.0) {
                    return Err(Error::Parameter("trigonometric observable is not bounded below by 0".into()));
                }
                Box::new(f.clone())
            }
        })
    }

    pub fn matrix(&self) -> Result<TransitionMatrix> {
        match &self.matrix {
            MatrixSource::Rows(rows) => TransitionMatrix::new(rows.clone()),
            MatrixSource::Name(n) if n == "golden-mean" => Ok(TransitionMatrix::golden_mean()),
            MatrixSource::Name(n) if n == "cat" => {
                let sys = self.system()?;
                Ok(self.partition(&sys)?.a)
            }
            MatrixSource::Name(n) if n.starts_with("full:") => {
                let k = n[5..]
                    .parse()
                    .map_err(|e| Error::Parse(format!("matrix {n}: {e}")))?;
                Ok(TransitionMatrix::full_shift(k))
            }
            MatrixSource::Name(path) => TransitionMatrix::parse(&fs::read_to_string(path)?),
        }
    }

    pub fn potential(&self, a: &TransitionMatrix, default: f64) -> Result<Potential> {
        match &self.potential {
            None => Potential::constant(a, default),
            Some(PotentialSource::Constant(c)) => Potential::constant(a, *c),
            Some(PotentialSource::Path(p)) => Potential::from_csv(a, &fs::read_to_string(p)?),
        }
    }
}

fn is_named_matrix(n: &str) -> bool {
    n == "golden-mean" || n == "cat" || n.starts_with("full:")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn partial_configs_fill_defaults() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"depth": 6, "observable": {"kind": "constant", "value": 2.0}}"#).unwrap();
        assert_eq!(c.depth, 6);
        assert_eq!(c.cells, 1 << 16);
        assert_eq!(c.observable, ObservableSpec::Constant { value: 2.0 });
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"dpeth": 6}"#).is_err());
    }

    #[test]
    fn matrices_resolve() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.matrix().unwrap().size(), 2);
        c.matrix = MatrixSource::Name("full:3".into());
        assert_eq!(c.matrix().unwrap().size(), 3);
        c.matrix = MatrixSource::Rows(vec![vec![1, 1], vec![1, 0]]);
        assert_eq!(c.matrix().unwrap().size(), 2);
        c.matrix = MatrixSource::Name("cat".into());
        assert!(c.matrix().unwrap().size() >= 2);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let c = ExperimentConfig { tol: Some(-1.0), ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { dim: 4, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { cells: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
