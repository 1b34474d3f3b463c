fn main() { std::process::exit(rqz_cli::cli_main(std::env::args().collect())); }
