fn main() {
    std::process::exit(qrs::run_cli());
}
