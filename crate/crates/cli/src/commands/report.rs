//! `report`: merge stage report CSVs into one summary.

use std::path::PathBuf;

use clap::Args;

use trilatent::analysis::{read_report_csv, write_report_csv};
use trilatent::Error;

use crate::config::{parse_list, ConfigFile};
use crate::digest::record_digests;
use crate::{CmdResult, Phase};

use super::{ensure_out_dir, require_path};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Comma-separated report CSVs to merge.
    #[arg(long)]
    pub inputs: Option<String>,
    /// Output directory (summary.csv).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: &ReportArgs, config: &ConfigFile) -> CmdResult {
    let inputs_raw = args
        .inputs
        .clone()
        .or_else(|| config.raw("inputs").map(str::to_string))
        .ok_or_else(|| Error::Config("missing required option --inputs".into()))
        .validation()?;
    let inputs: Vec<String> = parse_list(&inputs_raw, "inputs").validation()?;
    if inputs.is_empty() {
        return Err(Error::Config("no input reports given".into())).validation();
    }
    let out = require_path(&args.out, config, "out").validation()?;
    ensure_out_dir(&out).validation()?;

    let mut merged = Vec::new();
    let mut common_seed: Option<String> = None;
    for input in &inputs {
        let (rows, meta) = read_report_csv(std::path::Path::new(input)).stage()?;
        let seed = meta
            .get("seed")
            .cloned()
            .ok_or_else(|| Error::Format(format!("{input} has no seed metadata")))
            .stage()?;
        match &common_seed {
            None => common_seed = Some(seed),
            Some(existing) if *existing != seed => {
                return Err(Error::Config(format!(
                    "refusing to merge mixed seeds: {existing} vs {seed} ({input})"
                )))
                .stage();
            }
            Some(_) => {}
        }
        merged.extend(rows);
    }
    let meta = vec![
        ("seed".to_string(), common_seed.unwrap_or_default()),
        ("inputs".to_string(), inputs.join(";")),
    ];
    write_report_csv(&out.join("summary.csv"), &merged, &meta).stage()?;
    record_digests(&out, &["summary.csv".into()]).stage()?;
    println!("report: merged {} rows from {} files", merged.len(), inputs.len());
    Ok(())
}
