fn main() {
    std::process::exit(barbell::cli::main_with_args(std::env::args_os()));
}
