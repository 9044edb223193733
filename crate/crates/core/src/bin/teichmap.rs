fn main() {
    env_logger::init();
    std::process::exit(teichmap::cli::run(std::env::args_os()));
}
