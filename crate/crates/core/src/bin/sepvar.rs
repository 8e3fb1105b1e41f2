fn main() {
    std::process::exit(sepvar::cli::run(std::env::args_os()));
}
