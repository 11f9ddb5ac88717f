fn main() {
    std::process::exit(dyadic_factor::cli::run(std::env::args_os()));
}
