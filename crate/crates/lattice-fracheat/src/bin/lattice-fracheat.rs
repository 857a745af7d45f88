fn main() {
    std::process::exit(lattice_fracheat::cli::run_from(std::env::args_os()));
}
