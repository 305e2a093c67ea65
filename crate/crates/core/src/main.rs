use clap::Parser;

fn main() {
    let cli = parabolic::cli::Cli::parse();
    std::process::exit(parabolic::cli::run(&cli));
}
