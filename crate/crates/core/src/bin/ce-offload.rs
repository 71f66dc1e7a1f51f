fn main() {
    std::process::exit(ce_offload::cli::main_with_args(std::env::args_os()));
}
