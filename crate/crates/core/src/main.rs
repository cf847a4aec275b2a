fn main() {
    std::process::exit(frozen_sl::cli::run(std::env::args_os()));
}
