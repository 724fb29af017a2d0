fn main() {
    std::process::exit(setsketch_cli::cli_main(std::env::args_os()));
}
