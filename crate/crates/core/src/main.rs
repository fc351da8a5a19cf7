use clap::Parser;

fn main() {
    let cli = nn_mcda::cli::Cli::parse();
    if let Err(e) = nn_mcda::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
