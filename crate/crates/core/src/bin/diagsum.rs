fn main() {
    std::process::exit(diagsum::cli::run(std::env::args_os()));
}
