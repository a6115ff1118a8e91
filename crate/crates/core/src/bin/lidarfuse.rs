fn main() {
    std::process::exit(lidarfuse::commands::main_with_args(std::env::args_os()));
}
