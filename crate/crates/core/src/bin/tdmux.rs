fn main() {
    std::process::exit(tdmux::cli::main_with_args(std::env::args_os()));
}
