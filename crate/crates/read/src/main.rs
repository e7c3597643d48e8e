fn main() {
    std::process::exit(read::cli::run(std::env::args_os()));
}
