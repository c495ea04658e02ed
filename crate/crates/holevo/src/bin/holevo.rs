fn main() {
    std::process::exit(holevo::cli::run(std::env::args_os()));
}
