use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SLIM_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = slim_cli::Cli::parse();
    if let Err(err) = slim_cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(slim_cli::exit_code(&err));
    }
}
