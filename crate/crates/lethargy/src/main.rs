fn main() {
    std::process::exit(lethargy::cli::main());
}
