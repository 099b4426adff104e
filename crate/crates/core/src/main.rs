fn main() {
    std::process::exit(modelmeasure::cli::run(std::env::args_os()));
}
