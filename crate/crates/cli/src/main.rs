fn main() {
    std::process::exit(hsl_elicit_cli::cli_main(std::env::args_os()));
}
