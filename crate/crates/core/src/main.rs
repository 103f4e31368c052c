fn main() {
    std::process::exit(hagnn::cli::run(std::env::args_os()));
}
