use std::fs;
use std::path::PathBuf;

use clap::Args;
use tscf_core::synth::{generate_split, SynthKind};

use crate::exit::{CliError, CliResult};
use crate::files::write_dataset;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `sine-square` (2 classes) or `cbf` (3 classes).
    #[arg(long, default_value = "sine-square")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 64)]
    pub length: usize,
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    #[arg(long, default_value_t = 60)]
    pub train_size: usize,
    #[arg(long, default_value_t = 30)]
    pub test_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving `train.json` and `test.json`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let (train, test) = generate_split(args.kind, args.length, args.channels, args.train_size, args.test_size, args.seed)?;
    fs::create_dir_all(&args.out).map_err(CliError::input)?;
    write_dataset(&args.out.join("train.json"), &train)?;
    write_dataset(&args.out.join("test.json"), &test)?;
    Ok(())
}
