fn main() {
    std::process::exit(wiretap_cli::run(std::env::args_os()));
}
