fn main() {
    std::process::exit(qkd_trojan::cli::main_with(std::env::args_os()));
}
