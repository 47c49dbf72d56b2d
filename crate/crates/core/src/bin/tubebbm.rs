fn main() {
    std::process::exit(tubebbm::cli::run(std::env::args_os()));
}
