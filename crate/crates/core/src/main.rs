fn main() {
    std::process::exit(sing::cli::run(std::env::args_os()));
}
