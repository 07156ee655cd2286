fn main() {
    std::process::exit(qnml::cli::run(std::env::args_os()));
}
