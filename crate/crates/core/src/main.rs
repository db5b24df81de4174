fn main() {
    std::process::exit(composite_knockoffs::cli::run());
}
