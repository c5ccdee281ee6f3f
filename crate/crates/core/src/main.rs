fn main() {
    std::process::exit(graphmix::cli::run(std::env::args_os()));
}
