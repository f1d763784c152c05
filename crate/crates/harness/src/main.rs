fn main() {
    std::process::exit(pivotlab_harness::cli::run());
}
