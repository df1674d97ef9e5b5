fn main() {
    env_logger::init();
    std::process::exit(floquet_ap::cli::run(std::env::args_os()));
}
