fn main() {
    std::process::exit(wave3d_harness::cli::main_with(std::env::args_os()));
}
