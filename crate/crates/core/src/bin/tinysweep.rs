fn main() {
    std::process::exit(tinysweep::cli::run(std::env::args_os()));
}
