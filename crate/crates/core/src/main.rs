fn main() {
    std::process::exit(hardytime::cli::main_with_args(std::env::args_os()));
}
