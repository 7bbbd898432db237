fn main() {
    std::process::exit(pluripot::cli::main_with_args(std::env::args_os()));
}
