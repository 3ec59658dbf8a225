fn main() {
    std::process::exit(vibq::cli::main_with_args(std::env::args_os()));
}
