fn main() {
    std::process::exit(billiard_cli::run(std::env::args_os()));
}
