use std::process::ExitCode;

fn main() -> ExitCode {
    mrapriori::cli::run()
}
