fn main() {
    std::process::exit(qar::cli::run(std::env::args_os()));
}
