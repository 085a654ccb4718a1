fn main() {
    std::process::exit(nonlocal::cli::run(std::env::args_os()));
}
