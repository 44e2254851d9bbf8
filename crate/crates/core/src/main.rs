fn main() {
    std::process::exit(teleportsim::cli::run(std::env::args_os()));
}
