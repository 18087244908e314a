use clap::Parser;
use nestlat::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level())
        .parse_default_env()
        .init();
    std::process::exit(execute(&cli));
}
