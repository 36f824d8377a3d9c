fn main() {
    std::process::exit(abrlab::run(std::env::args_os()));
}
