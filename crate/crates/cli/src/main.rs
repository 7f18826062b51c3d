fn main() {
    std::process::exit(chimera_cli::run());
}
