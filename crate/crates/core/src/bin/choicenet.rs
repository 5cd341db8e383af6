fn main() {
    std::process::exit(choicenet::cli::run_cli(std::env::args_os()));
}
