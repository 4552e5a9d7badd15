//! Lint a pattern against every host dialect.
//!
//! ```text
//! cargo run --example lint -- '\Ab\Z' java
//! ```

use regexpassport::ast::{parse, Dialect};
use regexpassport::catalog::Catalog;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let pattern = args.next().unwrap_or_else(|| r"^\Qa.b\E\z".to_string());
    let dialect: Dialect = args.next().as_deref().unwrap_or("java").parse()?;

    let ast = parse(&pattern, dialect)?;
    let catalog = Catalog::builtin();
    println!("/{pattern}/ as written for {dialect}:");
    for (target, findings) in catalog.portability_matrix(&ast) {
        if findings.is_empty() {
            println!("  {target:<10} portable");
            continue;
        }
        for f in findings {
            println!(
                "  {target:<10} {} at {}..{} [{}]: {}",
                f.severity, f.location.start, f.location.end, f.entry_id, f.message
            );
        }
    }
    Ok(())
}
