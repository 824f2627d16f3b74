fn main() {
    std::process::exit(entroqp::cli::main_entry(std::env::args_os()));
}
