fn main() {
    std::process::exit(mimo_tas::cli::dispatch(std::env::args_os()));
}
