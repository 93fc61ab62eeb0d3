fn main() {
    std::process::exit(mvie_core::cli::run_cli(std::env::args_os()));
}
