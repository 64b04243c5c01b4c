fn main() {
    std::process::exit(shipem::cli::main_with_args(std::env::args_os()));
}
