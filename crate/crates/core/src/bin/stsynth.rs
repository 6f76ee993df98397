fn main() {
    std::process::exit(stsynth::cli::run_cli(std::env::args_os()));
}
