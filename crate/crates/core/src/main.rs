fn main() {
    std::process::exit(epinet::harness::cli(std::env::args_os()));
}
