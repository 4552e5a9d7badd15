//! Predict super-linear behavior and confirm it against two engines.
//!
//! ```text
//! cargo run --release --example detect -- '(a+)+$'
//! ```

use regexpassport::ast::{parse, Dialect};
use regexpassport::engines::DefenseConfig;
use regexpassport::sl::{detect, validate_attack, DetectBudget, EngineKind, ValidationConfig};

fn main() -> anyhow::Result<()> {
    let patterns: Vec<String> = std::env::args().skip(1).collect();
    let patterns = if patterns.is_empty() {
        vec!["(a+)+$".into(), "a+$".into(), r"^\d+$".into()]
    } else {
        patterns
    };
    let config = ValidationConfig::desk();
    for pattern in patterns {
        let ast = parse(&pattern, Dialect::Java)?;
        let p = detect(&ast, DetectBudget::desk());
        println!(
            "/{pattern}/: {:?} (direct {:?}, via {:?})",
            p.verdict, p.direct, p.via_variant
        );
        let Some(attack) = p.attack else { continue };
        println!(
            "  attack {:?} + {:?} x {} + {:?}",
            attack.prefix, attack.pump, attack.recommended_pumps, attack.suffix
        );
        for (name, engine) in [
            ("backtracker", EngineKind::Backtrack(DefenseConfig::none())),
            ("pike", EngineKind::Pike),
        ] {
            let v = validate_attack(&ast, &attack, engine, &config)?;
            let last = v.measurements.iter().max_by_key(|m| m.pumps).unwrap();
            println!(
                "  {name:<12} {:?}; {} pumps took {} steps in {:.1?}",
                v.family, last.pumps, last.steps, last.elapsed
            );
        }
    }
    Ok(())
}
