fn main() {
    std::process::exit(stretch_chaos::cli::run_from_env());
}
