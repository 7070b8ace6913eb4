fn main() {
    std::process::exit(wegner_lab::cli::main_from_env());
}
