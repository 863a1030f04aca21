fn main() {
    std::process::exit(lpfactor::cli::cli_dispatch(std::env::args_os()));
}
