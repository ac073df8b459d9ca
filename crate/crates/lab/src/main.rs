fn main() -> std::process::ExitCode {
    annihilate_lab::cli::main()
}
