//! Generate inputs for a pattern and print a sample of each kind.
//!
//! ```text
//! cargo run --example gen_inputs -- '(a|b)+c' 500 7
//! ```

use regexpassport::ast::{parse, Dialect};
use regexpassport::input_gen::{generate, DESK_GEN_BUDGET};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let pattern = args.next().unwrap_or_else(|| "(a|b)+c".into());
    let count: usize = args.next().map_or(Ok(200), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;

    let ast = parse(&pattern, Dialect::Java)?;
    let set = generate(&ast, count, DESK_GEN_BUDGET, seed)?;
    println!(
        "/{pattern}/ seed {seed}: {} positives, {} negatives, edge coverage {:.2}",
        set.positives.len(),
        set.negatives.len(),
        set.coverage
    );
    println!(
        "positives: {:?}",
        &set.positives[..set.positives.len().min(8)]
    );
    println!(
        "negatives: {:?}",
        &set.negatives[..set.negatives.len().min(8)]
    );
    Ok(())
}
