fn main() {
    std::process::exit(cepstra::cli::main_with_args(std::env::args_os()));
}
