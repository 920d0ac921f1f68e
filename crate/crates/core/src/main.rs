fn main() {
    std::process::exit(eh_sched::cli::run(std::env::args_os()));
}
