//! Super-linear regex detection: static ambiguity analysis, the anchored
//! and unbounded variant queries, attack synthesis and dynamic validation.

pub mod analysis;
mod attack;
mod validate;

use std::time::{Duration, Instant};

use serde::Serialize;

pub use attack::{
    synthesize_attack, AttackError, AttackString, EXPONENTIAL_PUMPS, POLYNOMIAL_PUMPS,
};
pub use validate::{
    slope, validate_attack, validate_program, EngineKind, Family, Measurement, ValidationConfig,
    Verdict,
};

use crate::ast::{anchor_variant, has_bounded_repeat, is_start_anchored, unbounded_variant, Ast};
use crate::automata::{compile_with, CompileError, CompileOptions, ANALYSIS_STATE_CAP};
use analysis::{analyze, Ambiguity, Exhausted, Limits, Positions};

/// Rough memory cost of one product-graph node, used to turn a memory
/// budget into a node cap.
const BYTES_PER_NODE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DetectBudget {
    pub time: Duration,
    pub memory_bytes: u64,
}

impl Default for DetectBudget {
    /// 60 seconds and 2 GB per regex.
    fn default() -> DetectBudget {
        DetectBudget {
            time: Duration::from_secs(60),
            memory_bytes: 2 << 30,
        }
    }
}

impl DetectBudget {
    pub fn desk() -> DetectBudget {
        DetectBudget {
            time: Duration::from_secs(5),
            memory_bytes: 256 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "kebab-case")]
pub enum Complexity {
    Linear,
    Polynomial,
    Exponential,
    /// Analysis could not finish: over budget, or an unsupported construct.
    Unknown(String),
}

impl Complexity {
    fn severity(&self) -> u8 {
        match self {
            Complexity::Unknown(_) => 0,
            Complexity::Linear => 1,
            Complexity::Polynomial => 2,
            Complexity::Exponential => 3,
        }
    }

    pub fn is_super_linear(&self) -> bool {
        matches!(self, Complexity::Polynomial | Complexity::Exponential)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Via {
    None,
    Anchored,
    Unbounded,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub verdict: Complexity,
    pub attack: Option<AttackString>,
    pub via_variant: Via,
    /// Verdict of the analysis of the pattern itself, before any variant.
    pub direct: Complexity,
}

/// A detector that can take part in an ensemble.
pub trait Detector {
    fn name(&self) -> &str;
    fn detect(&self, ast: &Ast, budget: DetectBudget) -> Prediction;
}

/// The built-in ambiguity detector with the variant queries.
#[derive(Debug, Clone, Copy, Default)]
pub struct AmbiguityDetector;

impl Detector for AmbiguityDetector {
    fn name(&self) -> &str {
        "ambiguity"
    }

    fn detect(&self, ast: &Ast, budget: DetectBudget) -> Prediction {
        detect(ast, budget)
    }
}

/// Run several detectors and keep the most severe prediction that carries
/// an attack.
pub fn detect_ensemble(detectors: &[&dyn Detector], ast: &Ast, budget: DetectBudget) -> Prediction {
    let mut best: Option<Prediction> = None;
    for d in detectors {
        let p = d.detect(ast, budget);
        if best
            .as_ref()
            .is_none_or(|b| p.verdict.severity() > b.verdict.severity())
        {
            best = Some(p);
        }
    }
    best.unwrap_or(Prediction {
        verdict: Complexity::Unknown("no detectors".into()),
        attack: None,
        via_variant: Via::None,
        direct: Complexity::Unknown("no detectors".into()),
    })
}

/// Analyze one pattern: on the original first, then on its variants if the
/// original looks linear or the analysis gave up.
pub fn detect(ast: &Ast, budget: DetectBudget) -> Prediction {
    let deadline = Instant::now() + budget.time;
    let limits = Limits {
        deadline,
        max_nodes: (budget.memory_bytes / BYTES_PER_NODE) as usize,
    };
    let mut check = None;
    let direct = query(ast, ast, limits, &mut check);
    if direct.0.is_super_linear() {
        return Prediction {
            verdict: direct.0.clone(),
            attack: direct.1,
            via_variant: Via::None,
            direct: direct.0,
        };
    }
    let mut variants = Vec::new();
    let anchored = !is_start_anchored(ast);
    let bounded = has_bounded_repeat(ast);
    if anchored {
        variants.push((Via::Anchored, anchor_variant(ast)));
    }
    if bounded {
        variants.push((Via::Unbounded, unbounded_variant(ast)));
    }
    if anchored && bounded {
        variants.push((Via::Both, anchor_variant(&unbounded_variant(ast))));
    }
    let mut best: Option<(Complexity, Option<AttackString>, Via)> = None;
    let mut unknown = matches!(direct.0, Complexity::Unknown(_)).then(|| direct.0.clone());
    for (via, variant) in variants {
        let (verdict, attack) = query(&variant, ast, limits, &mut check);
        if verdict.is_super_linear()
            && best
                .as_ref()
                .is_none_or(|b| verdict.severity() > b.0.severity())
        {
            best = Some((verdict, attack, via));
        } else if let Complexity::Unknown(_) = verdict {
            unknown.get_or_insert(verdict);
        }
    }
    match best {
        Some((verdict, attack, via)) => Prediction {
            verdict,
            attack,
            via_variant: via,
            direct: direct.0,
        },
        None => Prediction {
            verdict: if matches!(direct.0, Complexity::Unknown(_)) {
                unknown.unwrap()
            } else {
                Complexity::Linear
            },
            attack: None,
            via_variant: Via::None,
            direct: direct.0,
        },
    }
}

/// Analyze `target`; attacks are checked against `original`, whose engine
/// automaton is compiled once into `check`.
fn query(
    target: &Ast,
    original: &Ast,
    limits: Limits,
    check: &mut Option<Result<crate::automata::Nfa, CompileError>>,
) -> (Complexity, Option<AttackString>) {
    let nfa = match compile_with(
        target,
        CompileOptions {
            max_states: ANALYSIS_STATE_CAP,
            backtracking: false,
        },
    ) {
        Ok(n) => n,
        Err(CompileError::BudgetExceeded { .. }) => {
            return (Complexity::Unknown("budget".into()), None)
        }
        Err(e) => return (Complexity::Unknown(e.to_string()), None),
    };
    let positions = Positions::new(&nfa);
    let (verdict, witness, pumps) = match analyze(&positions, limits) {
        Ok(Ambiguity::None) => return (Complexity::Linear, None),
        Ok(Ambiguity::Exponential(w)) => (Complexity::Exponential, w, EXPONENTIAL_PUMPS),
        Ok(Ambiguity::Polynomial(w)) => (Complexity::Polynomial, w, POLYNOMIAL_PUMPS),
        Err(Exhausted::Time | Exhausted::Memory) => {
            return (Complexity::Unknown("budget".into()), None)
        }
    };
    let check = check.get_or_insert_with(|| crate::automata::compile_program(original));
    let Ok(check_nfa) = check else {
        return (
            Complexity::Unknown("original does not compile".into()),
            None,
        );
    };
    match synthesize_attack(&witness, &positions.follow(witness.state), pumps, check_nfa) {
        Ok(attack) => (verdict, Some(attack)),
        // Every pumped input can still match, so a backtracker never has to
        // explore the ambiguous paths to failure.
        Err(_) => (Complexity::Linear, None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, Dialect};

    fn run(p: &str) -> Prediction {
        detect(&parse(p, Dialect::Java).unwrap(), DetectBudget::desk())
    }

    #[test]
    fn reference_examples() {
        let p = run("(a+)+$");
        assert_eq!(
            (p.verdict.clone(), p.via_variant),
            (Complexity::Exponential, Via::None)
        );
        let a = p.attack.unwrap();
        assert_eq!(
            (
                a.prefix.as_str(),
                a.pump.as_str(),
                a.suffix.as_str(),
                a.recommended_pumps
            ),
            ("", "a", "b", 100)
        );

        let p = run("a+$");
        assert_eq!(p.direct, Complexity::Linear);
        assert_eq!(
            (p.verdict.clone(), p.via_variant),
            (Complexity::Polynomial, Via::Anchored)
        );
        let a = p.attack.unwrap();
        assert_eq!(
            (
                a.prefix.as_str(),
                a.pump.as_str(),
                a.suffix.as_str(),
                a.recommended_pumps
            ),
            ("", "a", "b", 100_000)
        );

        let p = run("(a{1,1000}){1,1000}$");
        assert_eq!(p.direct, Complexity::Unknown("budget".into()));
        assert_eq!(
            (p.verdict, p.via_variant),
            (Complexity::Exponential, Via::Unbounded)
        );

        let p = run("abc");
        assert_eq!((p.verdict, p.attack), (Complexity::Linear, None));
    }

    #[test]
    fn unexploitable_ambiguity_is_linear() {
        // any suffix still matches a prefix of the input
        assert_eq!(run("(a+)+").verdict, Complexity::Linear);
        assert!(matches!(run(r"(a)\1").verdict, Complexity::Unknown(_)));
    }
}
