//! Pipeline configuration, loaded from one TOML file and overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fpqe_core::clustering::FcmParams;
use fpqe_core::features::{FeatureConfig, LAMBDA};
use fpqe_core::imgcore::DEFAULT_VAR_THRESHOLD;
use fpqe_core::qap::QapConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Enhancement path applied by `enhance` and `run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnhanceStage {
    #[serde(rename = "qap")]
    Qap,
    #[serde(rename = "qap+gabor")]
    QapGabor,
    #[serde(rename = "gabor")]
    Gabor,
}

impl EnhanceStage {
    /// Appended to the input file stem of every output image.
    pub fn suffix(self) -> &'static str {
        match self {
            EnhanceStage::Qap => "_qap",
            EnhanceStage::QapGabor => "_qap_gabor",
            EnhanceStage::Gabor => "_gabor",
        }
    }

    pub fn uses_qap(self) -> bool {
        self != EnhanceStage::Gabor
    }

    pub fn uses_gabor(self) -> bool {
        self != EnhanceStage::Qap
    }
}

impl fmt::Display for EnhanceStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnhanceStage::Qap => "qap",
            EnhanceStage::QapGabor => "qap+gabor",
            EnhanceStage::Gabor => "gabor",
        })
    }
}

impl FromStr for EnhanceStage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qap" => Ok(EnhanceStage::Qap),
            "qap+gabor" | "qap_gabor" => Ok(EnhanceStage::QapGabor),
            "gabor" => Ok(EnhanceStage::Gabor),
            other => Err(format!("unknown stage {other:?}; expected qap, qap+gabor or gabor")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Optional `path,label` CSV; enables the feature selection report.
    pub labels: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            input_dir: PathBuf::from("images"),
            output_dir: PathBuf::from("out"),
            labels: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub fuzzifier: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let p = FcmParams::default();
        Self {
            fuzzifier: p.fuzzifier,
            tol: p.tol,
            max_iter: p.max_iter,
            seed: p.seed,
        }
    }
}

impl ClusteringConfig {
    pub fn fcm_params(&self) -> FcmParams {
        FcmParams {
            fuzzifier: self.fuzzifier,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            ..FcmParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub enabled: bool,
    /// External matcher template with `{a}` and `{b}`; the built-in correlation
    /// matcher is used when absent.
    pub matcher: Option<String>,
    pub max_shift: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            matcher: None,
            max_shift: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub qap: QapConfig,
    pub clustering: ClusteringConfig,
    pub eval: EvalConfig,
    pub var_threshold: f64,
    pub lambda: f64,
    /// Significance level of the feature selection tests.
    pub alpha: f64,
    pub stage: EnhanceStage,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            qap: QapConfig::default(),
            clustering: ClusteringConfig::default(),
            eval: EvalConfig::default(),
            var_threshold: DEFAULT_VAR_THRESHOLD,
            lambda: LAMBDA,
            alpha: 0.05,
            stage: EnhanceStage::QapGabor,
            jobs: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path.display(), e))?;
        Self::from_toml(&text).map_err(|e| CliError::input(path.display(), e))
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Input(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all TOML-representable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.qap.validate()?;
        let c = &self.clustering;
        if !(c.fuzzifier > 1.0) || !(c.tol > 0.0) || c.max_iter == 0 {
            return Err(CliError::Input(
                "clustering needs fuzzifier > 1, tol > 0 and max_iter > 0".into(),
            ));
        }
        if !(self.var_threshold >= 0.0) || !(self.lambda > 0.0) {
            return Err(CliError::Input("var_threshold must be >= 0 and lambda > 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Input(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            var_threshold: self.var_threshold,
            lambda: self.lambda,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_toml() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_toml(
            "stage = \"qap\"\n[clustering]\nseed = 7\n[qap]\nc_dry = 0.8\n[paths]\ninput_dir = \"fvc\"\n",
        )
        .unwrap();
        assert_eq!(cfg.stage, EnhanceStage::Qap);
        assert_eq!(cfg.clustering.seed, 7);
        assert_eq!(cfg.clustering.fuzzifier, 2.0);
        assert_eq!(cfg.qap.c_dry, 0.8);
        assert_eq!(cfg.qap.c_nd, 0.5);
        assert_eq!(cfg.paths.input_dir, PathBuf::from("fvc"));
        assert_eq!(cfg.lambda, LAMBDA);
    }

    #[test]
    fn bad_values_rejected() {
        assert!(PipelineConfig::from_toml("alpha = 1.5").is_err());
        assert!(PipelineConfig::from_toml("[clustering]\nfuzzifier = 1.0").is_err());
        assert!(PipelineConfig::from_toml("stage = \"stft\"").is_err());
        assert!(PipelineConfig::from_toml("unknown_key = 1").is_err());
    }

    #[test]
    fn stage_names() {
        for s in [EnhanceStage::Qap, EnhanceStage::QapGabor, EnhanceStage::Gabor] {
            assert_eq!(s.to_string().parse::<EnhanceStage>().unwrap(), s);
        }
        assert_eq!(EnhanceStage::QapGabor.suffix(), "_qap_gabor");
    }
}
