fn main() {
    std::process::exit(lbsvm::cli::main());
}
