fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = bezier_durrmeyer::cli::run(std::env::args_os(), &mut std::io::stderr());
    std::process::exit(code);
}
