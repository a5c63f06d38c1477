//! Experiment configuration: TOML file parsing, defaults and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{BuiltinProfile, OfdmConfig, PathProfile, ProfileDef};
use crate::error::{Error, Result};
use crate::link::LinkMode;

pub const DEFAULT_MASTER_SEED: u64 = 2009;

/// Tone count applied to Monte Carlo experiments by `--paper-scale`.
pub const FULL_SCALE_TONES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EigFit,
    MseVsNt,
    BoundTightness,
    Histograms,
    SirScan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::EigFit,
        ExperimentKind::MseVsNt,
        ExperimentKind::BoundTightness,
        ExperimentKind::Histograms,
        ExperimentKind::SirScan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::EigFit => "eig-fit",
            ExperimentKind::MseVsNt => "mse-vs-nt",
            ExperimentKind::BoundTightness => "bound-tightness",
            ExperimentKind::Histograms => "histograms",
            ExperimentKind::SirScan => "sir-scan",
        }
    }

    /// Experiments dominated by Monte Carlo estimation runs.
    pub fn is_mc_heavy(self) -> bool {
        matches!(
            self,
            ExperimentKind::MseVsNt | ExperimentKind::BoundTightness | ExperimentKind::Histograms
        )
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A builtin profile name or an inline power-delay table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileChoice {
    Builtin(BuiltinProfile),
    Custom(ProfileDef),
}

impl ProfileChoice {
    pub fn definition(&self) -> ProfileDef {
        match self {
            ProfileChoice::Builtin(b) => b.definition(),
            ProfileChoice::Custom(d) => d.clone(),
        }
    }

    pub fn resolve(&self, cfg: &OfdmConfig) -> Result<PathProfile> {
        PathProfile::from_def(&self.definition(), cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub profile: ProfileChoice,
    pub n_tones: usize,
    pub cp_len: usize,
    pub sample_period_s: f64,
    pub f_d_hz: f64,
    pub snr_db: f64,
    pub n_t_list: Vec<usize>,
    /// Estimations per N_t (per pilot sequence for bound-tightness,
    /// per cell for histograms, transfer matrices per point for sir-scan).
    pub n_trials: usize,
    pub n_pilot_seqs: usize,
    pub master_seed: u64,
    pub mode: LinkMode,
    /// Tone counts of the eig-fit grid.
    pub n_grid: Vec<usize>,
    /// Normalized Doppler values for eig-fit and sir-scan.
    pub fdts_list: Vec<f64>,
    pub snr_db_list: Vec<f64>,
    pub f_d_hz_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_path: Option<PathBuf>,
}

/// On-disk form: every field optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<ExperimentKind>,
    profile: Option<ProfileChoice>,
    n_tones: Option<usize>,
    cp_len: Option<usize>,
    sample_period_s: Option<f64>,
    f_d_hz: Option<f64>,
    snr_db: Option<f64>,
    n_t_list: Option<Vec<usize>>,
    n_trials: Option<usize>,
    n_pilot_seqs: Option<usize>,
    master_seed: Option<u64>,
    mode: Option<LinkMode>,
    n_grid: Option<Vec<usize>>,
    fdts_list: Option<Vec<f64>>,
    snr_db_list: Option<Vec<f64>>,
    f_d_hz_list: Option<Vec<f64>>,
    out_path: Option<PathBuf>,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

impl ExperimentConfig {
    /// Defaults per experiment. System constants follow the reference
    /// setup (1.25 MHz, N = 128, L_cp = 16, EVA, 200 Hz, 20 dB); Monte
    /// Carlo experiments run at desk scale (N = 32, histograms N = 16).
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            experiment: kind,
            profile: ProfileChoice::Builtin(BuiltinProfile::Eva),
            n_tones: 128,
            cp_len: 16,
            sample_period_s: 0.8e-6,
            f_d_hz: 200.0,
            snr_db: 20.0,
            n_t_list: vec![25, 50, 100, 200, 400, 800],
            n_trials: 500,
            n_pilot_seqs: 100,
            master_seed: DEFAULT_MASTER_SEED,
            mode: LinkMode::Model,
            n_grid: vec![128, 256, 512, 1024],
            fdts_list: linspace(0.01, 0.35, 20),
            snr_db_list: vec![10.0, 15.0, 20.0],
            f_d_hz_list: vec![100.0, 200.0, 300.0],
            out_path: None,
        };
        match kind {
            ExperimentKind::EigFit => {}
            ExperimentKind::MseVsNt => cfg.n_tones = 32,
            ExperimentKind::BoundTightness => {
                cfg.n_tones = 32;
                cfg.n_t_list = vec![50, 100, 200, 400];
                cfg.n_trials = 40;
            }
            ExperimentKind::Histograms => {
                cfg.n_tones = 16;
                cfg.n_t_list = vec![200];
                cfg.n_trials = 2000;
            }
            ExperimentKind::SirScan => {
                cfg.n_trials = 1000;
                cfg.fdts_list = vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2];
            }
        }
        cfg
    }

    /// Parse a config file. `kind` wins over (and must agree with) any
    /// `experiment` key in the file.
    pub fn from_toml_str(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let kind = match (kind, file.experiment) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!(
                    "config is for `{b}` but `{a}` was requested"
                )))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(Error::Config("no experiment given".into())),
        };
        let mut cfg = Self::defaults(kind);
        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if let Some(v) = file.$field { cfg.$field = v; })*
            };
        }
        overlay!(
            profile,
            n_tones,
            cp_len,
            sample_period_s,
            f_d_hz,
            snr_db,
            n_t_list,
            n_trials,
            n_pilot_seqs,
            master_seed,
            mode,
            n_grid,
            fdts_list,
            snr_db_list,
            f_d_hz_list
        );
        cfg.out_path = file.out_path;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, kind: Option<ExperimentKind>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, kind)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Switch Monte Carlo experiments to the full-size system.
    pub fn apply_full_scale(&mut self) {
        if self.experiment.is_mc_heavy() {
            self.n_tones = FULL_SCALE_TONES;
            self.cp_len = self.cp_len.max(16);
        }
        if self.experiment == ExperimentKind::Histograms {
            self.n_trials = 10_000;
        }
    }

    /// First 16 hex digits of SHA-256 over the canonical TOML form,
    /// ignoring the output path.
    pub fn config_hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.out_path = None;
        let digest = Sha256::digest(canonical.to_toml_string()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn ofdm(&self) -> Result<OfdmConfig> {
        OfdmConfig::new(self.n_tones, self.cp_len, self.sample_period_s)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        self.ofdm()?;
        if !(self.f_d_hz >= 0.0 && self.f_d_hz.is_finite()) {
            return fail(format!("f_d_hz must be nonnegative, got {}", self.f_d_hz));
        }
        if !self.snr_db.is_finite() {
            return fail("snr_db must be finite".into());
        }
        if self.n_t_list.is_empty() || self.n_t_list.contains(&0) {
            return fail("n_t_list must be nonempty with positive entries".into());
        }
        if self.n_trials == 0 {
            return fail("n_trials must be positive".into());
        }
        if self.n_pilot_seqs == 0 {
            return fail("n_pilot_seqs must be positive".into());
        }
        self.profile.resolve(&self.ofdm()?)?;
        match self.experiment {
            ExperimentKind::EigFit => {
                if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 2) {
                    return fail("n_grid needs tone counts >= 2".into());
                }
                if self.fdts_list.is_empty() {
                    return fail("fdts_list is empty".into());
                }
            }
            ExperimentKind::SirScan => {
                if self.fdts_list.is_empty() {
                    return fail("fdts_list is empty".into());
                }
                if self.n_trials < 100 {
                    return fail("sir-scan needs n_trials >= 100".into());
                }
            }
            ExperimentKind::Histograms => {
                if self.n_t_list.len() != 1 {
                    return fail("histograms take exactly one N_t".into());
                }
                if self.snr_db_list.is_empty() || self.f_d_hz_list.is_empty() {
                    return fail("histograms need snr_db_list and f_d_hz_list".into());
                }
            }
            ExperimentKind::MseVsNt | ExperimentKind::BoundTightness => {}
        }
        let bad_fdts = self.fdts_list.iter().any(|v| !(*v >= 0.0 && v.is_finite()));
        let bad_fd = self
            .f_d_hz_list
            .iter()
            .any(|v| !(*v >= 0.0 && v.is_finite()));
        let bad_snr = self.snr_db_list.iter().any(|v| !v.is_finite());
        if bad_fdts || bad_fd || bad_snr {
            return fail("sweep lists must hold finite, nonnegative values".into());
        }
        Ok(())
    }
}
