fn main() {
    std::process::exit(zigzag_pdmp::cli::run(std::env::args_os()));
}
