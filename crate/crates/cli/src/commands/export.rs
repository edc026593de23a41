//! `export treatment`.

use std::path::PathBuf;

use clap::Args;
use kpirl_core::features::{gram_matrix, KernelKind};
use kpirl_core::game::{enumerate_feature_space, NO_TOUCH};
use kpirl_core::kpirl::reward_from_alpha;
use kpirl_core::treatment::{RewardTable, TreatmentFile};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::learn::RewardFile;
use crate::error::CliError;
use crate::output::Output;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentArgs {
    /// Learned reward written by `learn kpirl`.
    #[arg(long, conflicts_with = "control")]
    pub reward: Option<PathBuf>,
    /// Write the control table (every touch worth one) instead.
    #[arg(long)]
    #[serde(default)]
    pub control: bool,
    /// Output file name.
    #[arg(long, default_value = "treatment.json")]
    pub name: String,
}

pub fn run(global: &GlobalArgs, args: &TreatmentArgs) -> Result<(), CliError> {
    let mut out = Output::create(global, "export treatment", args)?;
    let space = enumerate_feature_space();
    let no_touch = space.require_index(&NO_TOUCH).map_err(CliError::run)?;
    let table = match (&args.reward, args.control) {
        (Some(path), false) => {
            let text = out.read_input(path)?;
            let file: RewardFile =
                serde_json::from_str(&text).map_err(|e| CliError::InvalidInput(format!("{}: {e}", path.display())))?;
            if file.space_hash != space.hash() {
                return Err(CliError::InvalidInput(format!(
                    "{}: reward was learned on feature space {} but the game space is {}",
                    path.display(),
                    file.space_hash,
                    space.hash()
                )));
            }
            if file.alpha.len() != space.len() {
                return Err(CliError::InvalidInput(format!(
                    "{}: {} weights for {} feature vectors",
                    path.display(),
                    file.alpha.len(),
                    space.len()
                )));
            }
            let kind: KernelKind = file.kernel.parse().map_err(|e| CliError::InvalidInput(format!("{e}")))?;
            let kernel = gram_matrix(kind, &space).map_err(CliError::run)?;
            let reward = reward_from_alpha(DVector::from_vec(file.alpha), &kernel).map_err(CliError::run)?;
            RewardTable::from_reward(&reward, &space, no_touch, kind.to_string()).map_err(CliError::run)?
        }
        (None, true) => RewardTable::unit(space.len(), no_touch).map_err(CliError::run)?,
        _ => return Err(CliError::Usage("give exactly one of --reward or --control".into())),
    };
    let treatment = TreatmentFile::new(&table, &space).map_err(CliError::run)?;
    out.write(&args.name, treatment.to_json().map_err(CliError::run)?)?;
    let mut rows = String::from("index,no_touch,xp,yp,vm,vd,am,raw,shifted,clipped\n");
    for (i, v) in space.vectors().iter().enumerate() {
        let cells: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        rows.push_str(&format!("{i},{},{},{},{}\n", cells.join(","), table.raw[i], table.shifted[i], table.clipped[i]));
    }
    out.write("table.csv", rows)?;
    println!("ceiling {} over {} feature vectors", table.ceiling, table.len());
    out.finish()
}
