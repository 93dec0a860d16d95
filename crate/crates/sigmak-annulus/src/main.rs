fn main() {
    std::process::exit(sigmak_annulus::cli::run());
}
