use clap::Parser;

fn main() {
    let cli = aalen_fic_cli::Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = aalen_fic_cli::run(&cli, &mut stdout.lock()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
