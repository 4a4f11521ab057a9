fn main() {
    std::process::exit(fracneum::cli::main());
}
