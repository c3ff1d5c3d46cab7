fn main() -> std::process::ExitCode {
    qstatten::cli::main()
}
