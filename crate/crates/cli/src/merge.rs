use std::path::{Path, PathBuf};

use anyhow::Context as _;
use idiolect::adapters::{
    load_adapter, merge, read_safetensors, write_safetensors, AdapterConfig, LoraAdapter, MergeSpec, TensorNaming,
};
use serde::Serialize;

use crate::input_error;
use crate::output::{CommandMeta, Staged};
use crate::shared::{read_text, Context};

pub const WEIGHTS_FILE: &str = "adapter_model.safetensors";
pub const CONFIG_FILE: &str = "adapter_config.json";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Adapter directory holding `adapter_model.safetensors` and `adapter_config.json`; repeat per operand
    #[arg(long = "adapter")]
    adapters: Vec<PathBuf>,
    /// One non-negative ratio per adapter, e.g. `0.9,1` [default: all 1]
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,
}

#[derive(Serialize)]
struct MergeReport {
    operands: Vec<String>,
    ratios: String,
    merged_rank: usize,
    merged_alpha: f64,
    dtype: &'static str,
    targets: Vec<String>,
    /// Largest |merged ΔW − Σ ratio·ΔW| over every target, read back from the written file.
    max_residual: f64,
}

pub fn load_dir(dir: &Path) -> anyhow::Result<LoraAdapter> {
    let config_path = dir.join(CONFIG_FILE);
    let config: AdapterConfig = serde_json::from_str(&read_text(&config_path)?)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    let weights_path = dir.join(WEIGHTS_FILE);
    if !weights_path.exists() {
        return Err(input_error(format!("{} does not exist", weights_path.display())));
    }
    let bytes = std::fs::read(&weights_path).with_context(|| format!("reading {}", weights_path.display()))?;
    let file = read_safetensors(&bytes).with_context(|| format!("reading {}", weights_path.display()))?;
    let adapter =
        load_adapter(&file, &config, &TensorNaming::default()).with_context(|| format!("loading {}", dir.display()))?;
    Ok(adapter)
}

/// Largest deviation of `merged` from the weighted sum of operand deltas.
pub fn residual(merged: &LoraAdapter, operands: &[(&LoraAdapter, f64)]) -> anyhow::Result<f64> {
    let mut worst = 0.0f64;
    for target in merged.modules.keys() {
        let mut expected = None;
        for (adapter, ratio) in operands {
            let delta = adapter.effective_delta(target)?.scaled(*ratio);
            match &mut expected {
                None => expected = Some(delta),
                Some(sum) => sum.add_assign(&delta),
            }
        }
        let expected = expected.expect("at least one operand");
        worst = worst.max(merged.effective_delta(target)?.max_abs_diff(&expected));
    }
    Ok(worst)
}

pub fn run(ctx: &Context, args: Args) -> anyhow::Result<()> {
    let dirs = if args.adapters.is_empty() {
        ctx.config.adapters.clone()
    } else {
        args.adapters.clone()
    };
    if dirs.is_empty() {
        return Err(input_error("merge needs at least one --adapter"));
    }
    let ratios = if args.ratios.is_empty() {
        vec![1.0; dirs.len()]
    } else {
        args.ratios.clone()
    };
    if ratios.len() != dirs.len() {
        return Err(input_error(format!(
            "{} ratios given for {} adapters",
            ratios.len(),
            dirs.len()
        )));
    }

    let adapters = dirs.iter().map(|d| load_dir(d)).collect::<anyhow::Result<Vec<_>>>()?;
    let operands: Vec<(&LoraAdapter, f64)> = adapters.iter().zip(ratios.iter().copied()).collect();
    let merged = merge(&MergeSpec {
        operands: operands.clone(),
    })?;

    let naming = TensorNaming::default();
    let bytes = write_safetensors(&merged.to_tensor_file(&naming))?;
    let reread = load_adapter(&read_safetensors(&bytes)?, &merged.config(), &naming)?;
    let max_residual = residual(&reread, &operands)?;

    let ratio_text = merged.metadata.get("merge_ratios").cloned().unwrap_or_default();
    let report = MergeReport {
        operands: dirs.iter().map(|d| d.display().to_string()).collect(),
        ratios: ratio_text.clone(),
        merged_rank: merged.rank,
        merged_alpha: merged.alpha,
        dtype: merged.dtype.as_str(),
        targets: merged.modules.keys().cloned().collect(),
        max_residual,
    };

    let mut meta = CommandMeta::new("merge", ctx.seed);
    meta.input("adapters", &report.operands);
    meta.input("ratios", &ratios);
    let mut staged = Staged::new(meta);
    staged.add(format!("merged/{WEIGHTS_FILE}"), bytes);
    staged.add_json(format!("merged/{CONFIG_FILE}"), &merged.config());
    staged.add_json("merged/merge.json", &report);
    staged.commit(&ctx.out)?;

    println!(
        "merged {} adapters ({ratio_text}) into rank {}; max residual {max_residual:.3e}",
        adapters.len(),
        merged.rank
    );
    Ok(())
}
