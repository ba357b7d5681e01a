fn main() {
    std::process::exit(beaver_forge::cli::main());
}
