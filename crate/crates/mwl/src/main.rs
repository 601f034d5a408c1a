fn main() -> std::process::ExitCode {
    mwl::cli::main()
}
