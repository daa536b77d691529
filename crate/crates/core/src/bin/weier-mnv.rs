fn main() {
    std::process::exit(conformal_mnv::cli::run(std::env::args_os()));
}
