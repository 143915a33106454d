fn main() -> std::process::ExitCode {
    soundfield::cli::main()
}
