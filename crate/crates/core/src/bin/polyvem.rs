fn main() {
    std::process::exit(polyvem::cli::main_with_args(std::env::args_os()));
}
