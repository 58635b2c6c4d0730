use clap::Parser;
use cournot_nash_cli::{run, RunConfig};

fn main() {
    std::process::exit(run(&RunConfig::parse()));
}
