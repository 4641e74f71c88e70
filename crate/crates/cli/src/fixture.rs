use std::path::PathBuf;

use bgmix_core::fixture::write_fixture;
use clap::Args;

use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub fn run(args: &FixtureArgs) -> Result<(), CliError> {
    let paths = write_fixture(&args.out, args.seed)?;
    println!("fixture written to {}", paths.root.display());
    Ok(())
}
