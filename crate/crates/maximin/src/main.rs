fn main() {
    std::process::exit(maximin::cli::cli_main(std::env::args_os()));
}
