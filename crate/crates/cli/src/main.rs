fn main() {
    std::process::exit(sc_cli::run_env());
}
