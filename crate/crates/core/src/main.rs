fn main() {
    std::process::exit(nmt_isg::cli::main());
}
