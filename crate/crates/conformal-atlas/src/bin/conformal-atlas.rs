fn main() {
    std::process::exit(conformal_atlas::cli::main_entry());
}
