fn main() {
    env_logger::init();
    std::process::exit(mtcc::harness::cli::run(std::env::args()));
}
