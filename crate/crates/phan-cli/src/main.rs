use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let env_out = std::env::var(phan_cli::OUT_ENV).ok();
    let code = phan_cli::main_with(
        std::env::args_os(),
        env_out.as_deref(),
        &mut io::stdout(),
        &mut io::stderr(),
    );
    ExitCode::from(code as u8)
}
