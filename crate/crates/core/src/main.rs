fn main() {
    std::process::exit(failtax::cli::main_with_args(std::env::args_os()));
}
