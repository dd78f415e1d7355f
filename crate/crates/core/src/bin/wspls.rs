fn main() {
    std::process::exit(wspls::cli::main_with_args(std::env::args_os()));
}
