//! Optional JSON overrides file: any subset of environment, trainer, and
//! field parameters, applied between built-in defaults and command-line
//! flags.

use std::path::Path;

use serde::Deserialize;
use socnav::a2c::TrainConfig;
use socnav::env::EnvConfig;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    pub env: EnvOverrides,
    pub train: TrainOverrides,
    pub slm: SlmOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvOverrides {
    pub arena: Option<f64>,
    pub step_length: Option<f64>,
    pub success_threshold: Option<f64>,
    pub max_steps: Option<usize>,
    pub n_headings: Option<usize>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
    pub terminal_c: Option<f64>,
    pub alpha: Option<f64>,
    pub social_term_positive: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlmOverrides {
    pub m_agent: Option<f64>,
    pub n_agent: Option<f64>,
    pub m_person: Option<f64>,
    pub n_person: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub k_cap: Option<f64>,
    pub enable_hrsc: Option<bool>,
    pub enable_hisc: Option<bool>,
    pub enable_cac: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOverrides {
    pub total_env_steps: Option<usize>,
    pub n_steps: Option<usize>,
    pub value_loss_coef: Option<f64>,
    pub entropy_coef: Option<f64>,
    pub grad_clip_norm: Option<f64>,
    pub learning_rate: Option<f64>,
    pub decay_rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub log_interval: Option<usize>,
}

impl Overrides {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
    }

    pub fn apply_env(&self, cfg: &mut EnvConfig<f64>) {
        let o = &self.env;
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field { cfg.$field = v; })*
            };
        }
        set!(arena, step_length, success_threshold, max_steps, n_headings, gamma, sigma, terminal_c, alpha, social_term_positive);
        let s = &self.slm;
        macro_rules! set_slm {
            ($($field:ident),*) => {
                $(if let Some(v) = s.$field { cfg.slm.$field = v; })*
            };
        }
        set_slm!(m_agent, n_agent, m_person, n_person, a, b, c, k_cap, enable_hrsc, enable_hisc, enable_cac);
    }

    pub fn apply_train(&self, cfg: &mut TrainConfig) {
        let o = &self.train;
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field { cfg.$field = v; })*
            };
        }
        set!(
            total_env_steps,
            n_steps,
            value_loss_coef,
            entropy_coef,
            grad_clip_norm,
            learning_rate,
            decay_rho,
            epsilon,
            log_interval
        );
    }
}
