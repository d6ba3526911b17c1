fn main() {
    std::process::exit(holotrap::cli::main_with_args(std::env::args_os()));
}
