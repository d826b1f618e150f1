fn main() {
    std::process::exit(splithmc::cli::run(std::env::args_os()));
}
