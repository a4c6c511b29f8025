fn main() {
    std::process::exit(fluxopt::cli::run(std::env::args_os()));
}
