fn main() {
    std::process::exit(icanclean::cli::run(std::env::args_os()));
}
