fn main() {
    std::process::exit(nonlocality_cli::run(std::env::args_os()));
}
