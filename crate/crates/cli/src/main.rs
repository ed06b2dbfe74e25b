fn main() {
    std::process::exit(sflow_cli::main_with_args(std::env::args_os()));
}
