//! Experiment configuration: a strict TOML schema with load/save round-trip
//! and validation against module preconditions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub model: Model,
    pub params: Params,
    #[serde(default)]
    pub time: Time,
    #[serde(default)]
    pub coeffs: Coeffs,
    #[serde(default)]
    pub init: Init,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub bgk: BgkSection,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// BGK-specific knobs: where the local equilibrium M comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BgkSection {
    /// "default" builds mu_alpha from params.alpha; "file" reads a
    /// two-column CSV (v, M) on the exact grid.
    #[serde(default = "default_bgk_equilibrium")]
    pub equilibrium: String,
    #[serde(default)]
    pub file: String,
}

impl Default for BgkSection {
    fn default() -> Self {
        Self {
            equilibrium: default_bgk_equilibrium(),
            file: String::new(),
        }
    }
}

fn default_bgk_equilibrium() -> String {
    "default".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    #[default]
    Lfp,
    Bgk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub alpha: f64,
    #[serde(default = "default_dim")]
    pub dim: u32,
    #[serde(default = "default_extent")]
    pub extent: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_x_modes")]
    pub x_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Time {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default = "default_fit_start")]
    pub fit_window_start: f64,
}

impl Default for Time {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_end: default_t_end(),
            sample_every: default_sample_every(),
            fit_window_start: default_fit_start(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coeffs {
    /// "auto" runs the constants estimation and the selection recipe;
    /// "explicit" uses the (a, b, c, eps) fields.
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
}

impl Default for Coeffs {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            a: 0.0,
            b: 0.0,
            c: 0.0,
            eps: default_eps(),
            eps_grid: default_eps_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Init {
    /// "lfp-default", "bgk-default", "equilibrium", or "file".
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default)]
    pub file: String,
}

impl Default for Init {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            file: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default)]
    pub snapshots: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            snapshots: false,
        }
    }
}

fn default_seed() -> u64 {
    42
}
fn default_dim() -> u32 {
    1
}
fn default_extent() -> f64 {
    64.0
}
fn default_nodes() -> usize {
    2048
}
fn default_x_modes() -> usize {
    64
}
fn default_dt() -> f64 {
    0.05
}
fn default_t_end() -> f64 {
    10.0
}
fn default_sample_every() -> usize {
    1
}
fn default_fit_start() -> f64 {
    1.0
}
fn default_mode() -> String {
    "auto".into()
}
fn default_eps() -> f64 {
    0.1
}
fn default_eps_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}
fn default_preset() -> String {
    "lfp-default".into()
}
fn default_out_dir() -> String {
    "out".into()
}

impl SimConfig {
    /// Validate every numeric field against the module preconditions.
    pub fn validate(&self) -> Result<()> {
        crate::params::AlphaParams::new(self.params.alpha, self.params.dim)
            .map_err(|e| Error::Config(format!("params.alpha/params.dim: {e}")))?;
        crate::grid::VelocityGrid::new(self.params.extent, self.params.nodes)
            .map_err(|e| Error::Config(format!("params.extent/params.nodes: {e}")))?;
        if self.params.x_modes < 2 || self.params.x_modes % 2 != 0 {
            return Err(Error::Config(
                "params.x_modes must be even and at least 2".into(),
            ));
        }
        if !(self.time.dt > 0.0) {
            return Err(Error::Config("time.dt must be positive".into()));
        }
        if self.time.t_end < self.time.dt {
            return Err(Error::Config("time.t_end must be at least time.dt".into()));
        }
        if self.time.sample_every == 0 {
            return Err(Error::Config("time.sample_every must be positive".into()));
        }
        match self.coeffs.mode.as_str() {
            "auto" => {
                if self.coeffs.eps_grid.iter().any(|&e| e <= 0.0) {
                    return Err(Error::Config(
                        "coeffs.eps_grid entries must be positive".into(),
                    ));
                }
            }
            "explicit" => {
                crate::coeffs::HypoCoeffs::new(
                    self.coeffs.a,
                    self.coeffs.b,
                    self.coeffs.c,
                    self.coeffs.eps,
                )
                .map_err(|e| Error::Config(format!("coeffs: {e}")))?;
            }
            other => {
                return Err(Error::Config(format!(
                    "coeffs.mode must be \"auto\" or \"explicit\", got {other:?}"
                )))
            }
        }
        match self.init.preset.as_str() {
            "lfp-default" | "bgk-default" | "equilibrium" => {}
            "file" => {
                if self.init.file.is_empty() {
                    return Err(Error::Config(
                        "init.preset = \"file\" requires init.file".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "init.preset {other:?} is not one of lfp-default, bgk-default, \
                     equilibrium, file"
                )))
            }
        }
        match self.bgk.equilibrium.as_str() {
            "default" => {}
            "file" => {
                if self.bgk.file.is_empty() {
                    return Err(Error::Config(
                        "bgk.equilibrium = \"file\" requires bgk.file".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "bgk.equilibrium {other:?} is not \"default\" or \"file\""
                )))
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// FNV-1a 64 hash of the canonical serialization with the output
    /// destination normalized away, so the hash fingerprints the experiment
    /// rather than where its files land.
    pub fn hash(&self) -> u64 {
        let mut canonical = self.clone();
        canonical.output = Output::default();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in canonical.to_toml().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (model, init, alpha) = match name {
            "lfp-default" => (Model::Lfp, "lfp-default", 1.0),
            "bgk-default" => (Model::Bgk, "bgk-default", 1.0),
            other => return Err(Error::Config(format!("unknown preset {other:?}"))),
        };
        let cfg = SimConfig {
            model,
            params: Params {
                alpha,
                dim: 1,
                extent: default_extent(),
                nodes: default_nodes(),
                x_modes: default_x_modes(),
            },
            time: Time::default(),
            coeffs: Coeffs::default(),
            init: Init {
                preset: init.into(),
                file: String::new(),
            },
            output: Output::default(),
            bgk: BgkSection::default(),
            seed: default_seed(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = SimConfig::from_toml("[params]\nalpha = 1.0\n").unwrap();
        assert_eq!(cfg.params.nodes, 2048);
        assert_eq!(cfg.params.extent, 64.0);
        assert_eq!(cfg.time.dt, 0.05);
        assert_eq!(cfg.coeffs.mode, "auto");
        assert_eq!(cfg.init.preset, "lfp-default");
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn roundtrip_identity() {
        let cfg = SimConfig::preset("lfp-default").unwrap();
        let text = cfg.to_toml();
        let back = SimConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn alpha_out_of_range_names_the_constraint() {
        let err = SimConfig::from_toml("[params]\nalpha = 2.5\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("alpha") && msg.contains("(0, 2)"), "{msg}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = SimConfig::from_toml("[params]\nalpha = 1.0\ntypo_key = 3\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("typo_key") || msg.contains("unknown"), "{msg}");
    }

    #[test]
    fn explicit_coeffs_validated() {
        let text = "[params]\nalpha = 1.0\n[coeffs]\nmode = \"explicit\"\na = 1.0\nb = 1.0\nc = 3.0\neps = 0.1\n";
        let err = SimConfig::from_toml(text).unwrap_err();
        assert!(format!("{err}").contains("c^2 < ab"), "{err}");
    }

    #[test]
    fn bad_preset_rejected() {
        let text = "[params]\nalpha = 1.0\n[init]\npreset = \"mystery\"\n";
        assert!(SimConfig::from_toml(text).is_err());
    }
}
