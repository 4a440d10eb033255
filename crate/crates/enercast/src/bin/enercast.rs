fn main() {
    std::process::exit(enercast::cli::main_with_args(std::env::args_os()));
}
