fn main() {
    std::process::exit(modscat::cli::run(std::env::args_os()));
}
