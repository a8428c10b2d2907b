fn main() {
    std::process::exit(gpcr::cli::main_with_args(std::env::args_os()));
}
