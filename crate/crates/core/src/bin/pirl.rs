fn main() {
    std::process::exit(pirl::cli::cli_dispatch(std::env::args_os()));
}
