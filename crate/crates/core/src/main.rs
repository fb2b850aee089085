fn main() {
    std::process::exit(pushpull_sim::harness::cli_main(std::env::args_os()));
}
