fn main() {
    std::process::exit(peergroup_cli::main_with_args(std::env::args_os()));
}
