fn main() {
    std::process::exit(rarebn::cli::run(std::env::args_os()));
}
