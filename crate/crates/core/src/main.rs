fn main() {
    std::process::exit(implicitforge::cli::run(std::env::args_os()));
}
