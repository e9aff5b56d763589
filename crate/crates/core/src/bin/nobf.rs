use clap::Parser;

fn main() {
    std::process::exit(nobf::cli::main_with(nobf::cli::Cli::parse()));
}
