fn main() {
    std::process::exit(hessianlab::cli::main_from(std::env::args_os()));
}
