fn main() {
    dualdi::cli::init_logging();
    std::process::exit(dualdi::cli::run(std::env::args_os()));
}
