fn main() {
    std::process::exit(hsic_explain::cli::run(std::env::args_os()));
}
