fn main() {
    std::process::exit(quadcurl::cli::run(std::env::args_os()));
}
