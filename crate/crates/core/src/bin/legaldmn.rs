fn main() {
    std::process::exit(legaldmn::cli::main_with_args(std::env::args_os()));
}
