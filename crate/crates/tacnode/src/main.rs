fn main() { std::process::exit(tacnode::cli::main_entry()); }
