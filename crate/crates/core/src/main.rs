use env_logger::Env;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("REDISTRIB_LOG", "warn")).init();
    std::process::exit(redistrib::cli::run(std::env::args_os()));
}
