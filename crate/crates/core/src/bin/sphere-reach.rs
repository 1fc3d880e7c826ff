fn main() {
    std::process::exit(sphere_reach::cli::run(std::env::args_os()));
}
