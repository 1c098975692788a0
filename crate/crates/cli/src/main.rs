fn main() {
    std::process::exit(gkdv_cli::cli::main_with(std::env::args_os()));
}
