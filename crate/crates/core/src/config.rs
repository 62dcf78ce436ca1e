//! Flat `key = value` run configuration covering every estimation parameter
//! plus input/output paths. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pipeline::EstimationParams;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub params: EstimationParams,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value '{value}' for '{key}'"))
}

fn parse_list<T: FromStr, const N: usize>(key: &str, value: &str) -> std::result::Result<[T; N], String> {
    let items = value
        .split(',')
        .map(|v| parse_value::<T>(key, v.trim()))
        .collect::<std::result::Result<Vec<T>, String>>()?;
    let len = items.len();
    items
        .try_into()
        .map_err(|_| format!("'{key}' needs {N} comma-separated values, got {len}"))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let p = &mut self.params;
        match key {
            "seed" => p.seed = parse_value(key, value)?,
            "input_k" => p.input_k = parse_value(key, value)?,
            "noise_k" => p.noise_k = parse_value(key, value)?,
            "denoise_k" => p.denoise_k = parse_value(key, value)?,
            "denoise_sigma_k" => p.denoise_sigma_k = parse_value(key, value)?,
            "adaptive.thresholds" => p.adaptive.thresholds = parse_list(key, value)?,
            "adaptive.sizes" => p.adaptive.sizes = parse_list(key, value)?,
            "adaptive.rejection_interval_max" => p.adaptive.rejection_interval_max = parse_value(key, value)?,
            "sampling.k_s" => p.sampling.k_s = parse_value(key, value)?,
            "sampling.n_candidates" => p.sampling.n_candidates = parse_value(key, value)?,
            "sampling.rejection_fraction_normals" => {
                p.sampling.rejection_fraction_normals = parse_value(key, value)?
            }
            "sampling.rejection_fraction_positions" => {
                p.sampling.rejection_fraction_positions = parse_value(key, value)?
            }
            "sampling.max_resample_attempts" => p.sampling.max_resample_attempts = parse_value(key, value)?,
            "consensus.alpha_deg" => p.consensus.alpha_deg = parse_value(key, value)?,
            "consensus.max_iters" => p.consensus.max_iters = parse_value(key, value)?,
            "consensus.tol_deg" => p.consensus.tol_deg = parse_value(key, value)?,
            "consensus.tol_pos_rel" => p.consensus.tol_pos_rel = parse_value(key, value)?,
            "io.input" => self.input = Some(PathBuf::from(value)),
            "io.output" => self.output = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected 'key = value', found '{content}'"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|msg| Error::Config { line, msg })?;
        }
        cfg.params.validate()?;
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("seed", p.seed.to_string());
        put("input_k", p.input_k.to_string());
        put("noise_k", p.noise_k.to_string());
        put("denoise_k", p.denoise_k.to_string());
        put("denoise_sigma_k", p.denoise_sigma_k.to_string());
        put("adaptive.thresholds", join(&p.adaptive.thresholds));
        put("adaptive.sizes", join(&p.adaptive.sizes));
        put("adaptive.rejection_interval_max", p.adaptive.rejection_interval_max.to_string());
        put("sampling.k_s", p.sampling.k_s.to_string());
        put("sampling.n_candidates", p.sampling.n_candidates.to_string());
        put("sampling.rejection_fraction_normals", p.sampling.rejection_fraction_normals.to_string());
        put("sampling.rejection_fraction_positions", p.sampling.rejection_fraction_positions.to_string());
        put("sampling.max_resample_attempts", p.sampling.max_resample_attempts.to_string());
        put("consensus.alpha_deg", p.consensus.alpha_deg.to_string());
        put("consensus.max_iters", p.consensus.max_iters.to_string());
        put("consensus.tol_deg", p.consensus.tol_deg.to_string());
        put("consensus.tol_pos_rel", p.consensus.tol_pos_rel.to_string());
        if let Some(i) = &self.input {
            put("io.input", i.display().to_string());
        }
        if let Some(o) = &self.output {
            put("io.output", o.display().to_string());
        }
        s
    }
}
