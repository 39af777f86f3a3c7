use std::io::Write;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use tscf_core::select_by_utility;

use crate::config::parse_weights;
use crate::exit::{CliError, CliResult};
use crate::files::{read_json, to_json_text, write_json, FrontFile, SelectionFile, SELECTION_FORMAT_VERSION};

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Front file written by `explain`.
    #[arg(long)]
    pub front: PathBuf,
    /// Adversarial, sparsity, subsequence and plausibility weights.
    #[arg(long, default_value = "0.1,0.3,0.4,0.2")]
    pub weights: String,
    /// Write the selection here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &SelectArgs) -> CliResult<()> {
    let weights = parse_weights(&args.weights)?;
    let front: FrontFile = read_json(&args.front)?;
    if let Some(e) = &front.error {
        return Err(CliError::runtime(anyhow!("instance {} has no front: {e}", front.instance_id)));
    }
    let (index, member) = select_by_utility(&front.members, &weights)?;
    let selection = SelectionFile {
        format_version: SELECTION_FORMAT_VERSION,
        instance_id: front.instance_id,
        index,
        utility: weights.utility(&member.objectives),
        weights,
        member: member.clone(),
    };
    match &args.out {
        Some(path) => write_json(path, &selection),
        None => {
            let text = to_json_text(&selection)?;
            match std::io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::runtime(e)),
                _ => Ok(()),
            }
        }
    }
}
