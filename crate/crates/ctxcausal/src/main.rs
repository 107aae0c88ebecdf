fn main() {
    std::process::exit(ctxcausal::cli::run(std::env::args_os()));
}
