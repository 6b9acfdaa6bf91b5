fn main() {
    std::process::exit(nc_tails::cli::run());
}
