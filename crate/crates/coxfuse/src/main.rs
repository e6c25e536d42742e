fn main() {
    std::process::exit(coxfuse::cli::run(std::env::args_os()));
}
