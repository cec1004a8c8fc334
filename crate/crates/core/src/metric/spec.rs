//! JSON descriptions of metrics and measures.

use serde::{Deserialize, Serialize};

use super::conjugate::{biconjugate_metric, BiconjugateOptions};
use super::moment::MeasureSpec;
use super::MetricFunction;
use crate::error::{Error, Result};
use crate::rational::parse_rat;
use crate::toric::ToricDivisor;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricConfig {
    Canonical,
    Bergman {
        #[serde(default = "one")]
        temperature: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_weights: Option<Vec<f64>>,
    },
    Shift {
        base: Box<MetricConfig>,
        c: f64,
    },
    Blend {
        t: f64,
        g0: Box<MetricConfig>,
        g1: Box<MetricConfig>,
    },
    Translate {
        base: Box<MetricConfig>,
        m: Vec<i64>,
    },
    CustomGrid {
        axes: Vec<Vec<f64>>,
        values: Vec<f64>,
        gap_bound: f64,
        #[serde(default)]
        concave: bool,
    },
    Biconjugate {
        base: Box<MetricConfig>,
    },
}

impl MetricConfig {
    pub fn build(&self, divisor: &ToricDivisor) -> Result<MetricFunction> {
        match self {
            MetricConfig::Canonical => MetricFunction::canonical(divisor),
            MetricConfig::Bergman {
                temperature,
                log_weights,
            } => MetricFunction::fubini_study_with(divisor, *temperature, log_weights.clone()),
            MetricConfig::Shift { base, c } => Ok(base.build(divisor)?.shifted(*c)),
            MetricConfig::Blend { t, g0, g1 } => {
                MetricFunction::blend(&g0.build(divisor)?, &g1.build(divisor)?, *t)
            }
            MetricConfig::Translate { base, m } => {
                // `m` moves the divisor, so the base lives on the untranslated one.
                let neg: Vec<i64> = m.iter().map(|x| -x).collect();
                let shifted_back = divisor_translate(divisor, &neg)?;
                base.build(&shifted_back)?.translated(m)
            }
            MetricConfig::CustomGrid {
                axes,
                values,
                gap_bound,
                concave,
            } => MetricFunction::grid(divisor, axes.clone(), values.clone(), *gap_bound, *concave),
            MetricConfig::Biconjugate { base } => {
                let g = base.build(divisor)?;
                biconjugate_metric(&g, &BiconjugateOptions::for_dim(g.dim()))
            }
        }
    }
}

fn divisor_translate(d: &ToricDivisor, m: &[i64]) -> Result<ToricDivisor> {
    let vals = d
        .fan()
        .rays()
        .iter()
        .zip(d.ray_values())
        .map(|(r, a)| {
            let s: i64 = r.iter().zip(m).map(|(x, y)| x * y).sum();
            Ok(a + parse_rat(&s.to_string())?)
        })
        .collect::<Result<Vec<_>>>()?;
    ToricDivisor::new(d.fan().clone(), vals)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureConfig {
    Laplace,
    MongeAmpere { metric: MetricConfig },
    UniformBall { radius: f64 },
    /// Point masses on boundary strata; accepted by the parser so that it can be
    /// rejected with a precise message.
    BoundaryMass {
        #[serde(default)]
        weight: f64,
    },
}

impl MeasureConfig {
    pub fn build(&self, divisor: &ToricDivisor) -> Result<MeasureSpec> {
        match self {
            MeasureConfig::Laplace => Ok(MeasureSpec::laplace(divisor.fan())),
            MeasureConfig::MongeAmpere { metric } => MeasureSpec::from_metric(&metric.build(divisor)?),
            MeasureConfig::UniformBall { radius } => MeasureSpec::uniform_ball(divisor.fan(), *radius),
            MeasureConfig::BoundaryMass { .. } => Err(Error::InvalidMeasure(
                "measures must be densities on the open orbit; boundary mass is not supported".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::tests::p1;

    #[test]
    fn parse_and_build() {
        let cfg: MetricConfig = serde_json::from_value(serde_json::json!({
            "kind": "shift", "c": 0.3, "base": {"kind": "bergman"}
        }))
        .unwrap();
        let g = cfg.build(&p1()).unwrap();
        assert!((g.value(&[0.0]) - (0.3 - 0.5 * 2f64.ln())).abs() < 1e-15);
        let t: MetricConfig = serde_json::from_value(serde_json::json!({
            "kind": "translate", "m": [1], "base": {"kind": "canonical"}
        }))
        .unwrap();
        let d = crate::toric::ToricDivisor::from_ints(
            crate::toric::Fan::standard(crate::toric::StandardFan::P1),
            &[1, -2],
        )
        .unwrap();
        let gt = t.build(&d).unwrap();
        assert_eq!(gt.value(&[-1.0]), -2.0);
        let bad: MeasureConfig = serde_json::from_value(serde_json::json!({"kind": "boundary-mass"})).unwrap();
        assert!(matches!(bad.build(&p1()), Err(Error::InvalidMeasure(_))));
    }
}
