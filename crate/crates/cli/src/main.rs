fn main() {
    std::process::exit(drowsegate_cli::run(std::env::args_os()));
}
