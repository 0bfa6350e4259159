fn main() {
    std::process::exit(rsnn_lab::cli::main_with_args(std::env::args_os()));
}
