fn main() {
    std::process::exit(rotamp::cli::main_with_args(std::env::args_os()));
}
