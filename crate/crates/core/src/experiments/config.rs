use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::EnergyOptions;
use crate::error::{Error, Result};
use crate::metric::{LegendreOptions, MeasureConfig, MetricConfig};
use crate::quadrature::WeightedOptions;
use crate::sections::SectionOptions;
use crate::toric::ToricDivisor;

fn laplace() -> MeasureConfig {
    MeasureConfig::Laplace
}

/// Levels at which the ball-volume difference is computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSchedule {
    List(Vec<u32>),
    Geometric {
        #[serde(default = "one_u32")]
        start: u32,
        #[serde(default = "two_u32")]
        ratio: u32,
        max: u32,
    },
}

fn one_u32() -> u32 {
    1
}

fn two_u32() -> u32 {
    2
}

impl Default for KSchedule {
    fn default() -> Self {
        KSchedule::Geometric {
            start: 1,
            ratio: 2,
            max: 64,
        }
    }
}

impl KSchedule {
    pub fn levels(&self) -> Result<Vec<u32>> {
        let v = match self {
            KSchedule::List(v) => v.clone(),
            KSchedule::Geometric { start, ratio, max } => {
                if *start == 0 || *ratio < 2 {
                    return Err(Error::Config("geometric schedules need start ≥ 1 and ratio ≥ 2".into()));
                }
                let mut out = Vec::new();
                let mut k = *start as u64;
                while k <= *max as u64 {
                    out.push(k as u32);
                    k *= *ratio as u64;
                }
                out
            }
        };
        if v.is_empty() || v.contains(&0) {
            return Err(Error::Config("level schedule must be nonempty and positive".into()));
        }
        Ok(v)
    }
}

/// Numerical tolerances; unset fields take dimension-dependent defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Conjugate evaluation accuracy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugate: Option<f64>,
    /// Relative accuracy of cocharacter-space cubature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cubature_rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_boxes: Option<usize>,
    /// Allowed deviation of a measure's total mass from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
}

impl Tolerances {
    pub fn legendre(&self, n: usize) -> LegendreOptions {
        let mut o = LegendreOptions::for_dim(n);
        if let Some(t) = self.conjugate {
            o.tol = t;
        }
        o
    }

    pub fn cubature(&self, n: usize) -> WeightedOptions {
        let mut o = WeightedOptions::for_dim(n);
        if let Some(r) = self.cubature_rtol {
            o.tolerance.rtol = r;
        }
        if let Some(m) = self.max_boxes {
            o.tolerance.max_boxes = m;
        }
        o
    }

    pub fn sections(&self, n: usize) -> SectionOptions {
        SectionOptions {
            legendre: self.legendre(n),
            cubature: self.cubature(n),
        }
    }

    pub fn energy(&self, n: usize) -> EnergyOptions {
        let mut o = EnergyOptions::for_dim(n);
        o.legendre = self.legendre(n);
        o.cubature = self.cubature(n);
        o
    }

    pub fn normalization_tol(&self) -> f64 {
        self.normalization.unwrap_or(1e-6)
    }
}

/// Restrict levels with many sections to a deterministic sample of interior sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subsample {
    pub max_sections: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub divisor: ToricDivisor,
    pub g0: MetricConfig,
    pub g1: MetricConfig,
    #[serde(default = "laplace")]
    pub mu0: MeasureConfig,
    /// Defaults to `mu0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<MeasureConfig>,
    #[serde(default)]
    pub k_schedule: KSchedule,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<Subsample>,
    /// Stop the schedule after the first row that exceeds this wall-clock budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_budget_ms: Option<u64>,
    /// Optional acceptance threshold on the final gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_final_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn mu1(&self) -> &MeasureConfig {
        self.mu1.as_ref().unwrap_or(&self.mu0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeConfig {
    pub divisor: ToricDivisor,
    /// Level at which to enumerate lattice points.
    #[serde(default = "one_u32")]
    pub k: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateConfig {
    pub divisor: ToricDivisor,
    pub metric: MetricConfig,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub divisor: ToricDivisor,
    pub g0: MetricConfig,
    pub g1: MetricConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_radius() -> f64 {
    6.0
}

fn default_steps() -> usize {
    24
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionConfig {
    pub divisor: ToricDivisor,
    pub metric: MetricConfig,
    #[serde(default = "laplace")]
    pub measure: MeasureConfig,
    pub ks: Vec<u32>,
    /// Gauge radius of the evaluation grid.
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    /// Empty selects every tag.
    #[serde(default)]
    pub tags: Vec<String>,
}
