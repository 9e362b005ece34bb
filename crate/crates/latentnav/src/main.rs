fn main() {
    std::process::exit(latentnav::cli::run(std::env::args_os()));
}
