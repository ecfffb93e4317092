use clap::Parser;

fn main() {
    let args = bergman_lab::cli::Args::parse();
    std::process::exit(bergman_lab::cli::main_with_args(args));
}
