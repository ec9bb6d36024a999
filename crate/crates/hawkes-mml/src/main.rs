use clap::Parser;

fn main() {
    let cli = match hawkes_mml::cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not failures; real usage errors
            // exit with code 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = hawkes_mml::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
