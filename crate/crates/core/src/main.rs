fn main() {
    std::process::exit(streamkern::cli::main_with_args(std::env::args_os()));
}
