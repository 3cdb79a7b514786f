fn main() {
    std::process::exit(lrsparse::cli::run(std::env::args_os()));
}
