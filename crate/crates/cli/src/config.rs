//! Run configuration: one optional field per knob, resolved against per-test
//! defaults into an effective config that is echoed in every verdict.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// The nine suites, in summary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TestId {
    ScanAlpha,
    Continuity,
    DgEntropy,
    Circulation,
    FisherEl,
    TimeReversal,
    Galilei,
    Complexifier,
    Superposition,
}

impl TestId {
    pub const ALL: [TestId; 9] = [
        TestId::ScanAlpha,
        TestId::Continuity,
        TestId::DgEntropy,
        TestId::Circulation,
        TestId::FisherEl,
        TestId::TimeReversal,
        TestId::Galilei,
        TestId::Complexifier,
        TestId::Superposition,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TestId::ScanAlpha => "scan-alpha",
            TestId::Continuity => "continuity",
            TestId::DgEntropy => "dg-entropy",
            TestId::Circulation => "circulation",
            TestId::FisherEl => "fisher-el",
            TestId::TimeReversal => "time-reversal",
            TestId::Galilei => "galilei",
            TestId::Complexifier => "complexifier",
            TestId::Superposition => "superposition",
        }
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Config file contents. Absent fields take the suite default; unknown keys
/// are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub test: Option<TestId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_steps: Option<usize>,
    /// Coefficient handed to the momentum-balance audit, in units of `α⋆`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<f64>,
    /// Single `β`; replaces `betas`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_reg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Fully resolved settings for one suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub test: TestId,
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub masses: Vec<f64>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_steps: usize,
    pub alpha_factor: f64,
    pub boost: f64,
    pub diffusion: f64,
    pub betas: Vec<f64>,
    pub eps_reg: f64,
    pub mask_eps: f64,
    pub refine: bool,
    pub out: PathBuf,
}

impl Settings {
    /// Defaults of `test`, following the published configurations where
    /// one exists.
    pub fn defaults(test: TestId) -> Self {
        let base = Settings {
            test,
            n: 1024,
            length: 40.0,
            dt: 0.005,
            t_final: 1.0,
            record_stride: 1,
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
            masses: vec![0.5, 1.0, 3.0],
            alpha_min: 0.5,
            alpha_max: 1.5,
            alpha_steps: 41,
            alpha_factor: 1.0,
            boost: 1.5,
            diffusion: 0.05,
            betas: vec![0.0, 0.005, 0.01, 0.02, 0.05],
            eps_reg: 1e-6,
            mask_eps: fisher_hydro::residuals::RESIDUAL_MASK_EPS,
            refine: false,
            out: PathBuf::from("results"),
        };
        match test {
            TestId::ScanAlpha => Settings { n: 4096, length: 200.0, dt: 0.02, record_stride: 2, ..base },
            TestId::Continuity => Settings { n: 2048, length: 20.0, dt: 0.01, t_final: 0.0, ..base },
            TestId::DgEntropy => Settings { n: 512, dt: 0.01, t_final: 2.0, record_stride: 10, ..base },
            TestId::Circulation => Settings { n: 256, length: 20.0, dt: 0.0, t_final: 0.0, ..base },
            TestId::FisherEl => Settings { n: 2048, length: 16.0, dt: 0.0, t_final: 0.0, mask_eps: 1e-4, ..base },
            TestId::TimeReversal => Settings { t_final: 2.0, omega: 0.5, ..base },
            TestId::Galilei => Settings { dt: 0.01, t_final: 0.3, omega: 0.5, ..base },
            TestId::Complexifier => Settings { n: 2048, length: 32.0, dt: 1e-4, t_final: 0.0, ..base },
            TestId::Superposition => Settings { length: 32.0, t_final: 1.2, ..base },
        }
    }

    /// Overlay every field present in `cfg`.
    pub fn resolve(test: TestId, cfg: &RunConfig) -> Result<Self, CliError> {
        if let Some(t) = cfg.test {
            if t != test {
                return Err(CliError::Config(format!("config is for `{t}`, not `{test}`")));
            }
        }
        let d = Self::defaults(test);
        let betas = match (cfg.beta, &cfg.betas) {
            (Some(b), _) => vec![b],
            (None, Some(bs)) => bs.clone(),
            (None, None) => d.betas.clone(),
        };
        let s = Settings {
            test,
            n: cfg.n.unwrap_or(d.n),
            length: cfg.length.unwrap_or(d.length),
            dt: cfg.dt.unwrap_or(d.dt),
            t_final: cfg.t_final.unwrap_or(d.t_final),
            record_stride: cfg.record_stride.unwrap_or(d.record_stride),
            hbar: cfg.hbar.unwrap_or(d.hbar),
            mass: cfg.mass.unwrap_or(d.mass),
            omega: cfg.omega.unwrap_or(d.omega),
            masses: cfg.masses.clone().unwrap_or(d.masses),
            alpha_min: cfg.alpha_min.unwrap_or(d.alpha_min),
            alpha_max: cfg.alpha_max.unwrap_or(d.alpha_max),
            alpha_steps: cfg.alpha_steps.unwrap_or(d.alpha_steps),
            alpha_factor: cfg.alpha_factor.unwrap_or(d.alpha_factor),
            boost: cfg.boost.unwrap_or(d.boost),
            diffusion: cfg.diffusion.unwrap_or(d.diffusion),
            betas,
            eps_reg: cfg.eps_reg.unwrap_or(d.eps_reg),
            mask_eps: cfg.mask_eps.unwrap_or(d.mask_eps),
            refine: cfg.refine.unwrap_or(d.refine),
            out: cfg.out.clone().unwrap_or(d.out),
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.length > 0.0) || !(self.hbar > 0.0) || !(self.mass > 0.0) {
            return bad("length, hbar and mass must be positive");
        }
        if !(self.dt >= 0.0) || !(self.t_final >= 0.0) || self.record_stride == 0 {
            return bad("dt and t_final must be non-negative and record_stride at least 1");
        }
        if self.alpha_steps < 3 || !(self.alpha_max > self.alpha_min) || !(self.alpha_min > 0.0) {
            return bad("the coefficient scan needs 0 < alpha_min < alpha_max and at least 3 steps");
        }
        if !(self.alpha_factor > 0.0) || !(self.diffusion >= 0.0) || !(self.eps_reg > 0.0) || !(self.mask_eps > 0.0) {
            return bad("alpha_factor, eps_reg and mask_eps must be positive and diffusion non-negative");
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b >= 0.0)) {
            return bad("betas must be a non-empty list of non-negative values");
        }
        if self.masses.is_empty() || self.masses.iter().any(|m| !(*m > 0.0)) {
            return bad("masses must be a non-empty list of positive values");
        }
        Ok(())
    }

    /// The same settings as a complete config file.
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            test: Some(self.test),
            n: Some(self.n),
            length: Some(self.length),
            dt: Some(self.dt),
            t_final: Some(self.t_final),
            record_stride: Some(self.record_stride),
            hbar: Some(self.hbar),
            mass: Some(self.mass),
            omega: Some(self.omega),
            masses: Some(self.masses.clone()),
            alpha_min: Some(self.alpha_min),
            alpha_max: Some(self.alpha_max),
            alpha_steps: Some(self.alpha_steps),
            alpha_factor: Some(self.alpha_factor),
            boost: Some(self.boost),
            diffusion: Some(self.diffusion),
            beta: None,
            betas: Some(self.betas.clone()),
            eps_reg: Some(self.eps_reg),
            mask_eps: Some(self.mask_eps),
            refine: Some(self.refine),
            out: Some(self.out.clone()),
        }
    }
}

impl RunConfig {
    /// Parse a TOML file, or JSON when the extension is `.json`. An empty
    /// file is a schema error since `test` is mandatory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        if cfg.test.is_none() {
            return Err(CliError::Config(format!("{}: missing field `test`", path.display())));
        }
        Ok(cfg)
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: &RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(
            test, n, length, dt, t_final, record_stride, hbar, mass, omega, masses, alpha_min, alpha_max, alpha_steps,
            alpha_factor, boost, diffusion, beta, betas, eps_reg, mask_eps, refine, out
        );
        if other.beta.is_some() {
            self.betas = None;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_rejected() {
        let dir = std::env::temp_dir().join(format!("fh-empty-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("empty.toml");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(RunConfig::load(&p), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("test = \"galilei\"\nbogus = 1").is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = RunConfig { test: Some(TestId::Superposition), beta: Some(0.02), ..Default::default() };
        let s = Settings::resolve(TestId::Superposition, &cfg).unwrap();
        assert_eq!(s.betas, vec![0.02]);
        let again = Settings::resolve(TestId::Superposition, &s.to_config()).unwrap();
        assert_eq!(s, again);
        let text = toml::to_string(&s.to_config()).unwrap();
        assert_eq!(Settings::resolve(TestId::Superposition, &toml::from_str(&text).unwrap()).unwrap(), s);
    }

    #[test]
    fn test_mismatch_is_rejected() {
        let cfg = RunConfig { test: Some(TestId::Galilei), ..Default::default() };
        assert!(Settings::resolve(TestId::Circulation, &cfg).is_err());
    }

    #[test]
    fn single_beta_overrides_list() {
        let file = RunConfig { betas: Some(vec![0.1, 0.2]), ..Default::default() };
        let flags = RunConfig { beta: Some(0.0), ..Default::default() };
        let merged = file.overlay(&flags);
        assert_eq!(Settings::resolve(TestId::Superposition, &merged).unwrap().betas, vec![0.0]);
    }
}
