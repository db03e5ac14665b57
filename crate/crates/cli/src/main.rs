fn main() {
    let code = topoplan_cli::run(std::env::args_os());
    std::process::exit(code);
}
