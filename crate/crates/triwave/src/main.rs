use clap::Parser;

fn main() {
    let cli = triwave::cli::Cli::parse();
    if let Err(err) = triwave::cli::run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
