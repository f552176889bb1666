fn main() {
    std::process::exit(secbeam::cli::run(std::env::args_os()));
}
