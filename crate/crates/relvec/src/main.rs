fn main() {
    std::process::exit(relvec::cli::run(std::env::args_os()));
}
