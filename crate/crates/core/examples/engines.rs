//! Step counts of the three engine families on `(a+)+$`.
//!
//! ```text
//! cargo run --release --example engines
//! ```

use regexpassport::ast::{parse, Dialect};
use regexpassport::engines::{DefenseConfig, Program, DEFAULT_STEP_LIMIT, DESK_BUDGET};

fn main() -> anyhow::Result<()> {
    let program = Program::new(&parse("(a+)+$", Dialect::Java)?)?;
    let medium = DefenseConfig::counter(DEFAULT_STEP_LIMIT);
    let cached = DefenseConfig {
        memoize: true,
        ..medium
    };
    println!(
        "{:>3}  {:>10}  {:>18}  {:>10}  {:>6}",
        "n", "slow", "medium", "memoized", "pike"
    );
    for n in (4..=24).step_by(4) {
        let input = format!("{}b", "a".repeat(n));
        let slow = program.backtrack(&input, DefenseConfig::none(), DESK_BUDGET);
        let counted = program.backtrack(&input, medium, DESK_BUDGET);
        let memo = program.backtrack(&input, cached, DESK_BUDGET);
        let pike = program.pike(&input, DESK_BUDGET)?;
        println!(
            "{n:>3}  {:>10}  {:>18}  {:>10}  {:>6}",
            slow.steps,
            format!("{:?}", counted.outcome),
            memo.steps,
            pike.steps
        );
    }
    Ok(())
}
