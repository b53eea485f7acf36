fn main() {
    std::process::exit(subscm::cli::main_with_args(std::env::args_os()));
}
