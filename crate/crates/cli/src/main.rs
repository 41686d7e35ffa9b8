fn main() {
    std::process::exit(hyltl_cli::run(std::env::args_os()));
}
