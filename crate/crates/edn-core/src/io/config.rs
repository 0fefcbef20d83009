//! Textual run configuration: `key = value` lines mirroring NetworkConfig.
//! Missing keys fall back to defaults; unknown keys and bad values fail with
//! the offending key named.

use crate::error::{EdnError, Result};
use crate::graph::{NetworkConfig, RateGroups};
use std::fs;
use std::path::Path;

fn parse_list<const N: usize>(key: &str, value: &str) -> Result<[usize; N]> {
    let items: Vec<usize> = value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| EdnError::config(key, format!("`{value}` is not a list of integers")))
        })
        .collect::<Result<_>>()?;
    items
        .try_into()
        .map_err(|_| EdnError::config(key, format!("expected {N} comma-separated values")))
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| EdnError::config(key, format!("cannot parse `{value}`")))
}

pub fn parse_run_config(text: &str) -> Result<NetworkConfig> {
    let mut cfg = NetworkConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            EdnError::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "backbone_widths" => cfg.backbone_widths = parse_list::<5>(key, value)?,
            "decoder_width" => cfg.decoder_width = parse_scalar(key, value)?,
            "edb_width" => cfg.edb_width = parse_scalar(key, value)?,
            "rates_L" => cfg.rates.low = parse_list::<4>(key, value)?,
            "rates_H" => cfg.rates.high = parse_list::<4>(key, value)?,
            "rates_EH" => cfg.rates.extreme = parse_list::<4>(key, value)?,
            "lite" => cfg.lite = parse_scalar(key, value)?,
            "input_side" => cfg.input_side = parse_scalar(key, value)?,
            "seed" => cfg.seed = parse_scalar(key, value)?,
            other => {
                return Err(EdnError::config(other, "unknown key"));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_run_config(path: &Path) -> Result<NetworkConfig> {
    parse_run_config(&fs::read_to_string(path)?)
}

pub fn format_run_config(cfg: &NetworkConfig) -> String {
    let list = |xs: &[usize]| {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let RateGroups { low, high, extreme } = cfg.rates;
    format!(
        "backbone_widths = {}\ndecoder_width = {}\nedb_width = {}\nrates_L = {}\nrates_H = {}\nrates_EH = {}\nlite = {}\ninput_side = {}\nseed = {}\n",
        list(&cfg.backbone_widths),
        cfg.decoder_width,
        cfg.edb_width,
        list(&low),
        list(&high),
        list(&extreme),
        cfg.lite,
        cfg.input_side,
        cfg.seed,
    )
}
