use clap::Parser;

fn main() -> anyhow::Result<()> {
    localent::harness::cli::run(&localent::harness::cli::Cli::parse())
}
