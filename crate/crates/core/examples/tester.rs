//! Drive an external tester over the line protocol. Run without arguments,
//! this example starts itself as the tester (`tester serve <dialect>`),
//! which answers with the internal backtracker.
//!
//! ```text
//! cargo run --example tester
//! ```

use std::io::{stdin, stdout};
use std::time::Duration;

use regexpassport::ast::Dialect;
use regexpassport::external::{serve, Tester, TesterCommand};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.first().map(String::as_str) == Some("serve") {
        let dialect: Dialect = args.get(1).map_or(Ok(Dialect::Java), |d| d.parse())?;
        serve(stdin().lock(), stdout().lock(), dialect, None)?;
        return Ok(());
    }

    let me = std::env::current_exe()?.to_string_lossy().into_owned();
    for dialect in [Dialect::Java, Dialect::Ruby] {
        let command = TesterCommand::new(me.clone(), ["serve", &dialect.to_string()]);
        let mut tester = Tester::new(command, dialect);
        for (pattern, input) in [("^a", "x\na"), (r"(\w+)@(\w+)", "mail me@host")] {
            let r = tester.request_match(pattern, input, Duration::from_secs(1))?;
            println!("{dialect:<5} /{pattern}/ on {input:?}: {r:?}");
        }
        if let Some(h) = tester.handle() {
            println!("      pid {} served {} requests", h.pid(), h.requests());
        }
    }
    Ok(())
}
