use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use idsnet_core::data::{synth_dataset, write_csv, Dataset, SynthConfig};

#[derive(Args, Clone, Debug)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 6)]
    pub classes: usize,
    #[arg(long, default_value_t = 60)]
    pub features: usize,
    /// Rows of the largest class.
    #[arg(long, default_value_t = 500)]
    pub per_class: usize,
    /// Class-size ratios such as `10:1`; the last entry repeats for the
    /// remaining classes.
    #[arg(long)]
    pub imbalance: Option<String>,
    /// Centroid-to-boundary distance in noise standard deviations.
    #[arg(long, default_value_t = 5.0)]
    pub separation: f64,
    /// Amplitude of the per-class sinusoid along the feature axis.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_ratio(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad ratio entry '{p}'")))
        .collect::<Result<_>>()?;
    if parts.is_empty() || parts.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        bail!("imbalance ratios must be positive numbers, got '{text}'");
    }
    Ok(parts)
}

impl GenDataArgs {
    pub fn synth_config(&self) -> Result<SynthConfig> {
        Ok(SynthConfig {
            classes: self.classes,
            features: self.features,
            per_class: self.per_class,
            imbalance_profile: match &self.imbalance {
                Some(t) => parse_ratio(t)?,
                None => Vec::new(),
            },
            separation: self.separation,
            sequence_amplitude: self.amplitude,
            seed: self.seed,
        })
    }
}

pub fn gen_data(a: &GenDataArgs) -> Result<Dataset> {
    let d = synth_dataset(&a.synth_config()?)?;
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        super::ensure_dir(dir)?;
    }
    write_csv(&d, &a.out, b',')?;
    log::info!(
        "wrote {} rows × {} features ({} classes) to {}",
        d.len(),
        d.n_features(),
        d.n_classes(),
        a.out.display()
    );
    Ok(d)
}
