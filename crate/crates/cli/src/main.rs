fn main() {
    std::process::exit(profilerank_cli::run(std::env::args_os()));
}
