fn main() {
    std::process::exit(rollplan::cli::main_with(std::env::args_os()));
}
