fn main() {
    std::process::exit(dbmd_cli::main_with(std::env::args_os()));
}
