fn main() {
    std::process::exit(orlicz_sharp::cli::run(std::env::args_os()));
}
