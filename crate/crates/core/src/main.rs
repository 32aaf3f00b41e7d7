fn main() {
    std::process::exit(commdet::cli::main_with_args(std::env::args_os()));
}
