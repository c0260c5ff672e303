fn main() -> std::process::ExitCode {
    shvprobe::cli::main()
}
