fn main() -> std::process::ExitCode {
    abcs::cli::main()
}
