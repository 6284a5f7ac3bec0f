fn main() {
    std::process::exit(advlcd::cli::run(std::env::args_os()));
}
