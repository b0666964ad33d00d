fn main() {
    std::process::exit(tcbo::cli::run(std::env::args_os()));
}
