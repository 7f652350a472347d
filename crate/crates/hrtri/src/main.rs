fn main() -> std::process::ExitCode {
    hrtri::cli::run(std::env::args_os())
}
