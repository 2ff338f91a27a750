fn main() -> std::process::ExitCode {
    kgagent_service::cli::main_with_args()
}
