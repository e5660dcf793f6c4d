fn main() {
    std::process::exit(resonance_lab::cli::run(std::env::args_os()));
}
