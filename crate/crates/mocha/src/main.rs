fn main() { std::process::exit(mocha::cli::cli_main(std::env::args_os())); }
