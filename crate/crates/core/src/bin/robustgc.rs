fn main() {
    std::process::exit(robustgc::cli::run_from(std::env::args_os()));
}
