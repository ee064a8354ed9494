//! Drive the command pipeline from a JSON file, as the `ckuramoto` binary does.
//!
//! cargo run --example run_config -- compare configs/constant_field.json /tmp/ck

use clap::Parser;
use conformal_kuramoto::cli::{run, Cli};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let [_, command, config, out_dir] = args.as_slice() else {
        eprintln!("usage: run_config <simulate|reduce|compare|bench|classical> <config.json> <out-dir>");
        std::process::exit(1);
    };
    let cli = Cli::parse_from(["ckuramoto", command, "--config", config, "--out-dir", out_dir]);
    std::process::exit(run(&cli));
}
