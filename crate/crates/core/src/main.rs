fn main() {
    std::process::exit(roarbench::cli::run(std::env::args_os()));
}
