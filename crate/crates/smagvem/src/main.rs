use clap::Parser;

fn main() {
    let cli = smagvem::cli::Cli::parse();
    std::process::exit(smagvem::cli::run(cli));
}
