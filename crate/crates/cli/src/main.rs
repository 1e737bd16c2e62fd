use std::io;

fn main() {
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let code = kaf_cli::run(std::env::args_os(), &mut input, &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
