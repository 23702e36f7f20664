fn main() {
    mutabench::cli::install_interrupt_handler();
    std::process::exit(mutabench::cli::dispatch(std::env::args_os()));
}
