//! Flat key-value run configuration.

use crate::error::{Error, Result};
use crate::feature::{AlphaStrategy, Constraints, TransformLibrary};
use crate::glm::{Family, FamilySpec, Link};
use crate::gmjmcmc::{ChainConfig, ScheduleConfig};
use crate::mjmcmc::{KernelConfig, LocalMethod};
use crate::parallel::WeightMode;
use crate::Scalar;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Every setting of a fit. Keys are flat so the file reads as TOML or INI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: String,
    /// Empty for the canonical link.
    pub link: String,
    /// Preset (`classification`, `regression`, `G1`, `G2`) or comma separated names.
    pub transforms: String,
    pub max_depth: usize,
    pub max_width: usize,
    pub max_features: usize,
    /// `aic` (`e^-2`), `bic` (`e^(-2 log n)`) or a literal in (0, 1).
    pub prior_a: String,
    pub strategy: u32,
    pub sigma_alpha: f64,
    pub mc_draws: usize,
    pub population_size: usize,
    pub populations: usize,
    pub n_init: usize,
    pub n_expl: usize,
    pub n_final: usize,
    pub max_final_steps: usize,
    /// `(P_p, P_mo, P_mu, P_i)`.
    pub kind_probs: [f64; 4],
    pub keep_threshold: f64,
    pub protected: usize,
    /// 0 keeps `min(m, s)` covariates after screening.
    pub preselect: usize,
    pub parent_floor: f64,
    /// 0 disables pruning.
    pub prune_gap: f64,
    pub large_jump_prob: f64,
    pub local_steps: usize,
    /// `greedy` or `sa`.
    pub local_method: String,
    pub randomize_prob: f64,
    pub single_flip_prob: f64,
    pub sa_temperature: f64,
    pub sa_cooling: f64,
    /// Number of chains `B`.
    pub threads: usize,
    pub seed: u64,
    /// `mass_weighted` or `uniform`.
    pub weights: String,
    pub detection_threshold: f64,
    pub eta: f64,
    pub response: String,
    /// Comma separated.
    pub categorical: String,
    /// Column used as Poisson log offset; empty for none.
    pub offset: String,
    pub standardize: bool,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = ScheduleConfig::default();
        let k = KernelConfig::default();
        Self {
            family: "gaussian".into(),
            link: String::new(),
            transforms: "regression".into(),
            max_depth: 5,
            max_width: 20,
            max_features: 20,
            prior_a: "aic".into(),
            strategy: 1,
            sigma_alpha: 1.0,
            mc_draws: 50,
            population_size: s.population_size,
            populations: s.populations,
            n_init: s.n_init,
            n_expl: s.n_expl,
            n_final: s.n_final,
            max_final_steps: s.max_final_steps,
            kind_probs: s.kind_probs,
            keep_threshold: s.keep_threshold,
            protected: s.protected,
            preselect: 0,
            parent_floor: s.parent_floor,
            prune_gap: s.prune_gap.unwrap_or(0.0),
            large_jump_prob: k.large_jump_flip_prob,
            local_steps: k.local_steps,
            local_method: "greedy".into(),
            randomize_prob: k.randomize_flip_prob,
            single_flip_prob: k.single_flip_prob,
            sa_temperature: k.sa_start_temperature,
            sa_cooling: k.sa_cooling,
            threads: 1,
            seed: 1,
            weights: "mass_weighted".into(),
            detection_threshold: 0.25,
            eta: 0.5,
            response: "y".into(),
            categorical: String::new(),
            offset: String::new(),
            standardize: false,
            output_dir: ".".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    /// Sets one key from its textual value, as given on the command line.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let quoted = match toml::from_str::<toml::Table>(&format!("{key} = {value}")) {
            Ok(_) => format!("{key} = {value}"),
            Err(_) => format!("{key} = {}", toml::Value::String(value.to_string())),
        };
        let arrays = if key == "kind_probs" && !value.trim_start().starts_with('[') {
            format!("{key} = [{value}]")
        } else {
            quoted
        };
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let patch: toml::Table = toml::from_str(&arrays).map_err(|e| Error::Config(format!("{key}: {}", e.message())))?;
        for (k, v) in patch {
            if !table.contains_key(&k) {
                return Err(Error::Config(format!("unknown setting `{k}`")));
            }
            table.insert(k, v);
        }
        *self = table.try_into().map_err(|e: toml::de::Error| Error::Config(format!("{key}: {}", e.message())))?;
        Ok(())
    }

    /// Names of all settings.
    pub fn keys() -> Vec<String> {
        toml::Table::try_from(RunConfig::default()).map(|t| t.keys().cloned().collect()).unwrap_or_default()
    }

    /// The configuration as TOML text.
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn family(&self) -> Result<Family> {
        self.family.parse()
    }

    pub fn link(&self) -> Result<Option<Link>> {
        if self.link.trim().is_empty() { Ok(None) } else { self.link.parse().map(Some) }
    }

    pub fn family_spec<S: Scalar>(&self, offset: Option<Vec<S>>) -> Result<FamilySpec<S>> {
        FamilySpec::new(self.family()?, self.link()?, offset)
    }

    /// `log(a)` for a data set with `n` rows.
    pub fn log_a(&self, n: usize) -> Result<f64> {
        let v = match self.prior_a.trim().to_ascii_lowercase().as_str() {
            "aic" => -2.0,
            "bic" => -2.0 * (n as f64).ln(),
            lit => {
                let a: f64 = lit
                    .parse()
                    .map_err(|_| Error::Config(format!("prior_a must be `aic`, `bic` or a number, got `{lit}`")))?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::Config(format!("prior_a must lie in (0, 1), got {a}")));
                }
                a.ln()
            }
        };
        Ok(v)
    }

    pub fn weight_mode(&self) -> Result<WeightMode> {
        self.weights.parse()
    }

    pub fn categorical_columns(&self) -> Vec<String> {
        self.categorical.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    }

    /// Builds and validates the chain configuration for `n` observations.
    pub fn chain_config(&self, n: usize) -> Result<ChainConfig> {
        let local_method = match self.local_method.trim().to_ascii_lowercase().as_str() {
            "greedy" => LocalMethod::Greedy,
            "sa" | "annealing" | "simulated_annealing" => LocalMethod::SimulatedAnnealing,
            other => return Err(Error::Config(format!("local_method must be `greedy` or `sa`, got `{other}`"))),
        };
        let cfg = ChainConfig {
            schedule: ScheduleConfig {
                population_size: self.population_size,
                populations: self.populations,
                n_init: self.n_init,
                n_expl: self.n_expl,
                n_final: self.n_final,
                max_final_steps: self.max_final_steps,
                kind_probs: self.kind_probs,
                keep_threshold: self.keep_threshold,
                preselect_q0: (self.preselect > 0).then_some(self.preselect),
                protected: self.protected,
                parent_floor: self.parent_floor,
                prune_gap: (self.prune_gap > 0.0).then_some(self.prune_gap),
            },
            kernel: KernelConfig {
                large_jump_flip_prob: self.large_jump_prob,
                local_steps: self.local_steps,
                local_method,
                randomize_flip_prob: self.randomize_prob,
                single_flip_prob: self.single_flip_prob,
                max_features: self.max_features,
                sa_start_temperature: self.sa_temperature,
                sa_cooling: self.sa_cooling,
            },
            constraints: Constraints { max_depth: self.max_depth, max_width: self.max_width },
            library: TransformLibrary::from_name(&self.transforms)?,
            strategy: AlphaStrategy::from_number(self.strategy, self.sigma_alpha, self.mc_draws)?,
            log_a: self.log_a(n)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.family_spec::<f64>(None).or_else(|e| match e {
            // an offset requirement can only be judged with data
            Error::Config(_) if self.family().is_ok() && self.link().is_ok() => Ok(FamilySpec::gaussian()),
            other => Err(other),
        })?;
        self.weight_mode()?;
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.detection_threshold) {
            return Err(Error::Config(format!("detection_threshold must lie in [0, 1], got {}", self.detection_threshold)));
        }
        self.chain_config(2)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_toml_str(&c.echo()).unwrap(), c);
    }

    #[test]
    fn prior_symbols() {
        let mut c = RunConfig::default();
        assert_eq!(c.log_a(100).unwrap(), -2.0);
        c.prior_a = "bic".into();
        assert!((c.log_a(1000).unwrap() + 2.0 * 1000f64.ln()).abs() < 1e-12);
        c.prior_a = "0.5".into();
        assert!((c.log_a(10).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        c.prior_a = "1.5".into();
        assert!(c.log_a(10).is_err());
    }

    #[test]
    fn bad_kind_probs_message() {
        let c = RunConfig::from_toml_str("kind_probs = [0.5, 0.5, 0.5, 0.5]").unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("kind probabilities must sum to 1"), "{msg}");
    }

    #[test]
    fn flags_override_file_values() {
        let mut c = RunConfig::from_toml_str("seed = 4\ntransforms = \"G1\"\nthreads = 2").unwrap();
        c.set("seed", "9").unwrap();
        c.set("transforms", "sin,tanh").unwrap();
        c.set("kind_probs", "0.25,0.25,0.25,0.25").unwrap();
        c.set("standardize", "true").unwrap();
        assert_eq!((c.seed, c.threads, c.transforms.as_str(), c.standardize), (9, 2, "sin,tanh", true));
        assert_eq!(c.kind_probs, [0.25; 4]);
        assert!(c.set("nonsense", "1").is_err());
        assert!(c.set("seed", "abc").is_err());
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
    }
}
