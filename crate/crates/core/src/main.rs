fn main() {
    std::process::exit(mkl01::cli::main());
}
