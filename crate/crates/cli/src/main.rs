fn main() {
    std::process::exit(ssci_cli::app::main_entry());
}
