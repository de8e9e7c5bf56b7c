fn main() {
    std::process::exit(mwpose::cli::run(std::env::args_os()));
}
