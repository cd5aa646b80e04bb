fn main() {
    std::process::exit(tmk_qa::cli::run(std::env::args_os()));
}
