fn main() {
    std::process::exit(l1pde::cli::main_with_args(std::env::args_os()));
}
