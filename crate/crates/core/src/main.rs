fn main() {
    std::process::exit(screduce::cli::run(std::env::args_os()));
}
