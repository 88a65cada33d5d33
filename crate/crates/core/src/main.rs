fn main() {
    std::process::exit(fermi_kinetics::cli::main_from(std::env::args_os()));
}
