use std::io;

fn main() {
    let code = timpso::cli::main_with_args(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
