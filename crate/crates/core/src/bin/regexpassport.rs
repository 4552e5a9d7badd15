use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match regexpassport::cli::run(std::env::args_os(), &mut out) {
        Ok(code) => code,
        Err(e) => match e.downcast_ref::<clap::Error>() {
            Some(clap_err) => {
                let _ = clap_err.print();
                clap_err.exit_code()
            }
            None => {
                eprintln!("error: {e:#}");
                2
            }
        },
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
