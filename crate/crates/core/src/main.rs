fn main() {
    std::process::exit(qotsim::cli::run(std::env::args_os()));
}
