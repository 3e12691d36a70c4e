use clap::Parser;

fn main() {
    std::process::exit(evadkit::cli::run(evadkit::cli::Cli::parse()));
}
