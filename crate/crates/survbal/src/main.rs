fn main() {
    std::process::exit(survbal::run_cli(std::env::args_os()));
}
