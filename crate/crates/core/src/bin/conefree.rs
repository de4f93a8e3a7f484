fn main() {
    std::process::exit(conefree::run_cli(std::env::args_os()));
}
