fn main() {
    std::process::exit(satgen::cli::run(std::env::args()));
}
