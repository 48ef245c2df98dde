use std::io::Write;

fn main() {
    let out = cyclicity_cli::run_command(std::env::args_os());
    if !out.stdout.is_empty() {
        let mut stdout = std::io::stdout().lock();
        if stdout.write_all(&out.stdout).and_then(|_| stdout.flush()).is_err() {
            std::process::exit(cyclicity_cli::EXIT_NUMERIC);
        }
    }
    std::process::exit(out.code);
}
