fn main() {
    std::process::exit(ellax::cli::run(std::env::args_os()));
}
