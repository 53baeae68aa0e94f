fn main() {
    std::process::exit(diffcarl::cli::run(std::env::args_os()));
}
