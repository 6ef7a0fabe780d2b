fn main() {
    std::process::exit(snls_core::cli::main_with_args(std::env::args_os()));
}
