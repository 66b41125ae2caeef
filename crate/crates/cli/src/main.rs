fn main() {
    std::process::exit(lattice_cli::run(std::env::args_os()));
}
