use ariadne_cli::commands::{run, Cli};
use ariadne_cli::exit;
use clap::Parser;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout and succeed; usage errors share
            // the generic error status
            let code = if e.use_stderr() {
                exit::ERROR
            } else {
                exit::PATH
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(&cli));
}
