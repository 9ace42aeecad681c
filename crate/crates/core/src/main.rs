use std::process::ExitCode;

fn main() -> ExitCode {
    let (code, out) = chaf_earley::cli::run(std::env::args_os());
    if code == chaf_earley::cli::EXIT_USAGE {
        eprint!("{out}");
    } else {
        print!("{out}");
    }
    ExitCode::from(code as u8)
}
