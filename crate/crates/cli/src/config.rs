//! Flat `section.key=value` run configuration.

use std::collections::BTreeMap;

use symdec_core::dataset::DEFAULT_P_SCHEDULE;
use symdec_core::decoder::{DecoderArch, DecoderConfig, Readout};
use symdec_core::evalbench::{desk_grid, full_grid};
use symdec_core::oracle::OracleConfig;
use symdec_core::reopt::ReoptConfig;

use crate::error::{CliError, Result};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "USD_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn desk_and_full(code: &str) -> Vec<(&'static str, String, String)> {
    let o = (OracleConfig::desk(), OracleConfig::full());
    // The decoder epoch count at full size differs per code.
    let full_decoder_epochs = if code == "golay" { 30 } else { 50 };
    let d = (DecoderConfig::desk(), DecoderConfig::full(full_decoder_epochs));
    let r = (ReoptConfig::desk(), ReoptConfig::full());
    let arch = DecoderArch::default();
    let same = |v: String| (v.clone(), v);
    let pair = |a: String, b: String| (a, b);
    let schedule = DEFAULT_P_SCHEDULE.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    let rows: Vec<(&'static str, (String, String))> = vec![
        ("run.seed", same("0".into())),
        ("oracle.hidden", same(o.0.hidden.to_string())),
        ("oracle.train_samples", pair(o.0.train_samples.to_string(), o.1.train_samples.to_string())),
        ("oracle.test_samples", pair(o.0.test_samples.to_string(), o.1.test_samples.to_string())),
        ("oracle.batch", same(o.0.batch.to_string())),
        ("oracle.epochs", pair(o.0.epochs.to_string(), o.1.epochs.to_string())),
        ("oracle.lr", same(o.0.lr.to_string())),
        ("decoder.d_model", same(arch.d_model.to_string())),
        ("decoder.heads", same(arch.heads.to_string())),
        ("decoder.layers", same(arch.layers.to_string())),
        ("decoder.ff_width", same(arch.ff_width.to_string())),
        ("decoder.readout", same("mean-pool".into())),
        ("decoder.train_pairs", pair(d.0.train_pairs.to_string(), d.1.train_pairs.to_string())),
        ("decoder.test_pairs", pair(d.0.test_pairs.to_string(), d.1.test_pairs.to_string())),
        ("decoder.batch", same(d.0.batch.to_string())),
        ("decoder.micro_batch", same(d.0.micro_batch.to_string())),
        ("decoder.epochs", pair(d.0.epochs.to_string(), d.1.epochs.to_string())),
        ("decoder.lr", same(d.0.lr.to_string())),
        ("decoder.p_schedule", same(schedule)),
        ("decoder.to_convergence", same("false".into())),
        ("decoder.patience", same(d.0.patience.to_string())),
        ("decoder.max_epochs", same(d.0.max_epochs.to_string())),
        ("reopt.batch", same(r.0.batch.to_string())),
        ("reopt.micro_batch", same(r.0.micro_batch.to_string())),
        ("reopt.epochs", pair(r.0.epochs.to_string(), r.1.epochs.to_string())),
        ("reopt.lr", same(r.0.lr.to_string())),
        ("sweep.grid", pair("desk".into(), "full".into())),
        ("sweep.trials", same("10000".into())),
        ("metrics.samples", same("10000".into())),
    ];
    rows.into_iter().map(|(k, (a, b))| (k, a, b)).collect()
}

impl Config {
    /// Built-in defaults; `code` only affects the full-size decoder epochs.
    pub fn defaults(scale: Scale, code: &str) -> Self {
        let values = desk_and_full(code)
            .into_iter()
            .map(|(k, desk, full)| (k.to_string(), if scale == Scale::Full { full } else { desk }))
            .collect();
        Self { values }
    }

    /// Both columns of the defaults, for documentation.
    pub fn default_table(code: &str) -> Vec<(&'static str, String, String)> {
        desk_and_full(code)
    }

    /// Rebuilds a configuration from resolved entries, rejecting unknown or
    /// missing keys.
    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = Self::defaults(Scale::Desk, "");
        if entries.len() != cfg.values.len() {
            return Err(CliError::Config("manifest configuration is incomplete".into()));
        }
        for (k, v) in entries {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let slot = self
            .values
            .get_mut(key)
            .ok_or_else(|| CliError::Config(format!("unknown configuration key `{key}`")))?;
        *slot = value.trim().to_string();
        Ok(())
    }

    /// Parses `key=value` text; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got `{line}`", no + 1)))?;
            self.set(k.trim(), v).map_err(|e| CliError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn merge_assignment(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got `{kv}`")))?;
        self.set(k.trim(), v)
    }

    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.raw(key)
            .parse()
            .map_err(|_| CliError::Config(format!("`{key}` has invalid value `{}`", self.raw(key))))
    }

    pub fn seed(&self) -> Result<u64> {
        self.parse("run.seed")
    }

    pub fn oracle(&self) -> Result<OracleConfig> {
        Ok(OracleConfig {
            hidden: self.parse("oracle.hidden")?,
            train_samples: self.parse("oracle.train_samples")?,
            test_samples: self.parse("oracle.test_samples")?,
            batch: self.parse("oracle.batch")?,
            epochs: self.parse("oracle.epochs")?,
            lr: self.parse("oracle.lr")?,
            seed: self.seed()?,
        })
    }

    pub fn decoder(&self) -> Result<DecoderConfig> {
        let readout = match self.raw("decoder.readout") {
            "mean-pool" => Readout::MeanPool,
            "flatten" => Readout::Flatten,
            other => return Err(CliError::Config(format!("`decoder.readout` must be mean-pool or flatten, got `{other}`"))),
        };
        Ok(DecoderConfig {
            arch: DecoderArch {
                d_model: self.parse("decoder.d_model")?,
                heads: self.parse("decoder.heads")?,
                layers: self.parse("decoder.layers")?,
                ff_width: self.parse("decoder.ff_width")?,
                readout,
            },
            train_pairs: self.parse("decoder.train_pairs")?,
            test_pairs: self.parse("decoder.test_pairs")?,
            batch: self.parse("decoder.batch")?,
            micro_batch: self.parse("decoder.micro_batch")?,
            epochs: self.parse("decoder.epochs")?,
            lr: self.parse("decoder.lr")?,
            seed: self.seed()?,
            to_convergence: self.parse("decoder.to_convergence")?,
            patience: self.parse("decoder.patience")?,
            max_epochs: self.parse("decoder.max_epochs")?,
        })
    }

    pub fn p_schedule(&self) -> Result<Vec<f64>> {
        parse_list(self.raw("decoder.p_schedule"), "decoder.p_schedule")
    }

    pub fn reopt(&self) -> Result<ReoptConfig> {
        Ok(ReoptConfig {
            batch: self.parse("reopt.batch")?,
            micro_batch: self.parse("reopt.micro_batch")?,
            epochs: self.parse("reopt.epochs")?,
            lr: self.parse("reopt.lr")?,
            seed: self.seed()?,
        })
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        match self.raw("sweep.grid") {
            "desk" => Ok(desk_grid()),
            "full" => Ok(full_grid()),
            list => parse_list(list, "sweep.grid"),
        }
    }

    pub fn trials(&self) -> Result<u64> {
        self.parse("sweep.trials")
    }

    pub fn metrics_samples(&self) -> Result<usize> {
        self.parse("metrics.samples")
    }

    /// Parses every section so errors surface before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.oracle()?;
        self.decoder()?;
        self.reopt()?;
        let schedule = self.p_schedule()?;
        if schedule.is_empty() || schedule.iter().any(|p| !(0.0..0.75).contains(p)) {
            return Err(CliError::Config("`decoder.p_schedule` needs values in [0, 0.75)".into()));
        }
        let grid = self.grid()?;
        if grid.is_empty() || grid.iter().any(|p| !(0.0..0.75).contains(p)) {
            return Err(CliError::Config("`sweep.grid` needs values in [0, 0.75)".into()));
        }
        if self.trials()? == 0 || self.metrics_samples()? == 0 {
            return Err(CliError::Config("`sweep.trials` and `metrics.samples` must be positive".into()));
        }
        Ok(())
    }
}

fn parse_list(text: &str, key: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("`{key}` has invalid entry `{t}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_differ_by_scale() {
        let desk = Config::defaults(Scale::Desk, "color-d5");
        let full = Config::defaults(Scale::Full, "color-d5");
        desk.validate().unwrap();
        full.validate().unwrap();
        assert_eq!(desk.oracle().unwrap().train_samples, 1_000_000);
        assert_eq!(full.oracle().unwrap().train_samples, 10_000_000);
        assert_eq!(full.decoder().unwrap().epochs, 50);
        assert_eq!(Config::defaults(Scale::Full, "golay").decoder().unwrap().epochs, 30);
        assert_eq!(desk.reopt().unwrap().epochs, 20);
        assert_eq!(desk.grid().unwrap().len(), 10);
        assert_eq!(full.grid().unwrap().len(), 491);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let mut cfg = Config::defaults(Scale::Desk, "golay");
        cfg.merge_text("# comment\noracle.lr = 0.001\n\nsweep.grid=0.01,0.02 # inline\n").unwrap();
        assert_eq!(cfg.oracle().unwrap().lr, 0.001);
        assert_eq!(cfg.grid().unwrap(), vec![0.01, 0.02]);
        let mut again = Config::defaults(Scale::Desk, "golay");
        again.merge_text(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        assert!(cfg.merge_text("oracle.unknown=1").is_err());
        assert!(cfg.merge_text("no equals sign").is_err());
        cfg.set("decoder.readout", "sideways").unwrap();
        assert!(cfg.validate().is_err());
        assert!(Config::from_entries(&BTreeMap::new()).is_err());
    }
}
