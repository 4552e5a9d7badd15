use std::time::Duration;

use serde::Serialize;

use super::attack::AttackString;
use crate::ast::Ast;
use crate::engines::{DefenseConfig, EngineError, MatchResult, Outcome, Program};

/// Which engine an attack is run against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EngineKind {
    Backtrack(DefenseConfig),
    Pike,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationConfig {
    /// An evaluation slower than this marks the regex super-linear.
    pub threshold: Duration,
    /// Fractions of the recommended pump count to measure.
    pub ladder: Vec<f64>,
    /// Minimum per-pump step ratio for exponential growth.
    pub exponential_ratio: f64,
    /// Accepted log-log slope range for polynomial growth.
    pub polynomial_slope: (f64, f64),
    /// Consecutive pump counts measured to test for exponential growth.
    pub probe: (u64, u64),
    /// Times the ladder is scaled down by 4 when measurements time out.
    pub max_rescales: usize,
}

impl Default for ValidationConfig {
    fn default() -> ValidationConfig {
        ValidationConfig {
            threshold: crate::engines::DEFAULT_BUDGET,
            ladder: vec![0.25, 0.5, 1.0],
            exponential_ratio: 1.5,
            polynomial_slope: (1.5, 4.5),
            probe: (16, 20),
            max_rescales: 6,
        }
    }
}

impl ValidationConfig {
    pub fn desk() -> ValidationConfig {
        ValidationConfig {
            threshold: crate::engines::DESK_BUDGET,
            ..ValidationConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    ExponentialConfirmed,
    PolynomialConfirmed {
        degree: f64,
    },
    LinearObserved,
    /// The step counter aborted the evaluation.
    Defended,
}

impl Family {
    pub fn is_super_linear(&self) -> bool {
        matches!(
            self,
            Family::ExponentialConfirmed | Family::PolynomialConfirmed { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub pumps: u64,
    pub steps: u64,
    pub elapsed: Duration,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub family: Family,
    /// Ladder measurements, at least three.
    pub measurements: Vec<Measurement>,
    /// Least-squares slope of log(steps) over log(pumps) on completed
    /// ladder points.
    pub degree: Option<f64>,
    /// Smallest per-pump step ratio in the exponential probe.
    pub growth_ratio: Option<f64>,
    pub exceeded_threshold: bool,
}

/// Run `attack` against the original pattern `ast`.
pub fn validate_attack(
    ast: &Ast,
    attack: &AttackString,
    engine: EngineKind,
    config: &ValidationConfig,
) -> Result<Verdict, EngineError> {
    validate_program(&Program::new(ast)?, attack, engine, config)
}

pub fn validate_program(
    program: &Program,
    attack: &AttackString,
    engine: EngineKind,
    config: &ValidationConfig,
) -> Result<Verdict, EngineError> {
    let measure = |pumps: u64| -> Result<Measurement, EngineError> {
        let input = attack.build(pumps);
        let r: MatchResult = match engine {
            EngineKind::Backtrack(d) => program.backtrack(&input, d, config.threshold),
            EngineKind::Pike => program.pike(&input, config.threshold)?,
        };
        Ok(Measurement {
            pumps,
            steps: r.steps,
            elapsed: r.elapsed,
            outcome: r.outcome,
        })
    };
    let finished = |m: &Measurement| m.outcome.is_decided() && m.elapsed < config.threshold;

    let mut measurements = Vec::new();
    let mut scale = 1.0;
    for _ in 0..=config.max_rescales {
        let mut pumps: Vec<u64> = config
            .ladder
            .iter()
            .map(|f| ((f * scale * attack.recommended_pumps as f64).round() as u64).max(1))
            .collect();
        pumps.dedup();
        let mut round = Vec::new();
        for p in pumps {
            let m = measure(p)?;
            let stop = !finished(&m);
            round.push(m);
            if stop {
                break;
            }
        }
        let done = round.iter().filter(|m| finished(m)).count();
        let aborted = round.iter().any(|m| m.outcome == Outcome::AbortedByCounter);
        measurements.extend(round);
        if done >= 3 || aborted || scale * attack.recommended_pumps as f64 <= 4.0 {
            break;
        }
        scale /= 4.0;
    }

    let defended = measurements
        .iter()
        .any(|m| m.outcome == Outcome::AbortedByCounter);
    let exceeded_threshold = measurements.iter().any(|m| !finished(m));

    let mut ratios = Vec::new();
    let mut last: Option<u64> = None;
    for n in config.probe.0..=config.probe.1 {
        let m = measure(n)?;
        if !m.outcome.is_decided() {
            break;
        }
        if let Some(prev) = last {
            ratios.push(m.steps as f64 / prev.max(1) as f64);
        }
        last = Some(m.steps);
    }
    let growth_ratio =
        (!ratios.is_empty()).then(|| ratios.iter().copied().fold(f64::MAX, f64::min));

    let points: Vec<(f64, f64)> = measurements
        .iter()
        .filter(|m| finished(m))
        .map(|m| ((m.pumps as f64).ln(), (m.steps.max(1) as f64).ln()))
        .collect();
    let degree = slope(&points);

    let family = if defended {
        Family::Defended
    } else if exceeded_threshold
        && ratios.len() >= 2
        && growth_ratio.is_some_and(|r| r >= config.exponential_ratio)
    {
        Family::ExponentialConfirmed
    } else if exceeded_threshold
        && degree.is_some_and(|d| d >= config.polynomial_slope.0 && d <= config.polynomial_slope.1)
    {
        Family::PolynomialConfirmed {
            degree: degree.unwrap(),
        }
    } else {
        Family::LinearObserved
    };
    Ok(Verdict {
        family,
        measurements,
        degree,
        growth_ratio,
        exceeded_threshold,
    })
}

/// Least-squares slope; `None` with fewer than two distinct x values.
pub fn slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0]
            .iter()
            .map(|&x| (x.ln(), (3.0 * x * x).ln()))
            .collect();
        assert!((slope(&pts).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(slope(&pts[..1]), None);
    }
}
