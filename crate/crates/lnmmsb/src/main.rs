fn main() {
    std::process::exit(lnmmsb::cli::run());
}
