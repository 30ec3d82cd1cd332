fn main() {
    std::process::exit(pwcyl::cli::run(std::env::args_os()));
}
