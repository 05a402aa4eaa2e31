//! Runs every subcommand in-process against the bundled demo configuration.

use std::path::Path;

fn main() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/demo.conf");
    let config = config.to_str().unwrap();
    for args in [
        vec!["flow-eval", "--config", config],
        vec!["equiv-check", "--config", config, "--samples", "2000"],
        vec!["smooth-build", "--config", config],
        vec!["derivative-report", "--config", config],
    ] {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = suspflow::cli::run(
            std::iter::once("suspflow").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        let text = String::from_utf8(out).unwrap();
        let last = text.lines().last().unwrap_or("");
        println!("{} -> exit {code}", args[0]);
        println!("  last line: {last}");
        if !err.is_empty() {
            println!("  stderr: {}", String::from_utf8_lossy(&err).trim());
        }
    }
}
