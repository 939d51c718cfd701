fn main() {
    std::process::exit(smoothcall::cli::main_with_args(std::env::args_os()));
}
