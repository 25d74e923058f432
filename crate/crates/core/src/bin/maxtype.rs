fn main() {
    std::process::exit(maxtype_core::cli::run(std::env::args_os()));
}
