fn main() {
    std::process::exit(trilatent_cli::cli::run_main(std::env::args_os()));
}
