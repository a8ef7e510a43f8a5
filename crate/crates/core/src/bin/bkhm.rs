fn main() {
    std::process::exit(bkhm::cli::run(std::env::args_os()));
}
