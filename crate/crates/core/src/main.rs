fn main() {
    let stdout = std::io::stdout();
    let code = bec_cavity::cli::cli_main(std::env::args_os(), &mut stdout.lock());
    std::process::exit(code);
}
