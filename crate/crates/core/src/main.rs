fn main() {
    std::process::exit(hypercurv::cli::run(std::env::args_os()));
}
