use clap::Parser;

fn main() {
    std::process::exit(rffkm::cli::run(rffkm::cli::Cli::parse()));
}
