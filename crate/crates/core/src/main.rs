fn main() {
    std::process::exit(morphreg::pipeline::cli::main());
}
