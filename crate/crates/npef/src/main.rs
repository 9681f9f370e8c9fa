fn main() {
    std::process::exit(npef::cli::main_with_args(std::env::args_os()));
}
