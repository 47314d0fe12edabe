fn main() {
    let code = montparnasse::cli::app::run(std::env::args().collect());
    std::process::exit(code);
}
