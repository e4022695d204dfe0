fn main() {
    std::process::exit(monge::cli::run_main());
}
