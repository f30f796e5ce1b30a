fn main() {
    std::process::exit(genpolar::cli::run(std::env::args_os()));
}
