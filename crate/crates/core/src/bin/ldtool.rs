fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(ldkit::cli::main_recorded(&args));
}
