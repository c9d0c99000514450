fn main() {
    cachesim::cli::configure_threads();
    std::process::exit(cachesim::cli::main_with_args(std::env::args_os()));
}
