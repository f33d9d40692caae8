fn main() {
    std::process::exit(leveling_cli::run(std::env::args_os()));
}
