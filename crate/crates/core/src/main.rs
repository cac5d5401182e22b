fn main() {
    std::process::exit(implinet::cli::run(std::env::args_os()));
}
