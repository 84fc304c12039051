fn main() {
    std::process::exit(vallab_cli::run(std::env::args_os()));
}
