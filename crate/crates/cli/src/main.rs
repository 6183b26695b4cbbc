fn main() {
    std::process::exit(hywav_cli::run(std::env::args_os()));
}
