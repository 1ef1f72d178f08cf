fn main() {
    std::process::exit(icrl_bench::cli::main_with_args(std::env::args_os()));
}
