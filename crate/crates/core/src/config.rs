//! Sampler configuration and the flat key=value config format.

use std::path::Path;

use crate::error::{Error, Result};

/// Priors, passenger rate, and MCMC schedule for one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Dirichlet-process concentration.
    pub concentration: f64,
    /// (shape, rate) of the Gamma hyper-prior on the base-measure rate gamma.
    /// None selects the scale-aware default (1, crude genome rate) at fit time.
    pub gamma_prior: Option<(f64, f64)>,
    /// Known passenger per-base rate; required by the driver model only.
    pub lambda0: Option<f64>,
    /// Beta prior on the driver proportion.
    pub pi_prior: (f64, f64),
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    /// Initial log-scale step sizes for the (alpha, beta) random walks.
    pub proposal_scales: (f64, f64),
    /// Standard deviation of the Normal prior on log effects; infinity
    /// recovers the improper flat prior.
    pub effect_prior_sigma: f64,
    /// Auxiliary components per non-conjugate assignment update.
    pub aux_components: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            concentration: 1.0,
            gamma_prior: None,
            lambda0: None,
            pi_prior: (1.0, 1.0),
            iterations: 20_000,
            burn_in: 10_000,
            thin: 10,
            seed: 0,
            proposal_scales: (0.1, 0.1),
            effect_prior_sigma: 1.0,
            aux_components: 3,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.concentration > 0.0) {
            return Err(Error::config("concentration must be > 0"));
        }
        if let Some((s, r)) = self.gamma_prior {
            if !(s > 0.0 && r > 0.0) {
                return Err(Error::config("gamma_prior parameters must be > 0"));
            }
        }
        if let Some(l0) = self.lambda0 {
            if !(l0 > 0.0) {
                return Err(Error::config("lambda0 must be > 0"));
            }
        }
        if !(self.pi_prior.0 > 0.0 && self.pi_prior.1 > 0.0) {
            return Err(Error::config("pi_prior parameters must be > 0"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config("burn_in must be smaller than iterations"));
        }
        if self.thin == 0 {
            return Err(Error::config("thin must be >= 1"));
        }
        // Scale 0 freezes the corresponding effect vector at 1.
        if !(self.proposal_scales.0 >= 0.0 && self.proposal_scales.1 >= 0.0) {
            return Err(Error::config("proposal_scales must be >= 0"));
        }
        if !(self.effect_prior_sigma > 0.0) {
            return Err(Error::config("effect_prior_sigma must be > 0 (or inf for flat)"));
        }
        if self.aux_components == 0 {
            return Err(Error::config("aux_components must be >= 1"));
        }
        Ok(())
    }

    /// Gamma hyper-prior resolved against the data: default shape 1 with the
    /// prior mean of gamma centered at 1 / crude genome rate.
    pub fn resolved_gamma_prior(&self, crude_rate: f64) -> (f64, f64) {
        match self.gamma_prior {
            Some(p) => p,
            None => {
                let rate = if crude_rate > 0.0 { crude_rate } else { 1.0 };
                (1.0, rate)
            }
        }
    }

    /// Number of records a run will keep.
    pub fn n_records(&self) -> u64 {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Echo in the config-file syntax (used by run manifests).
    pub fn echo(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("concentration={}\n", self.concentration));
        if let Some((s, r)) = self.gamma_prior {
            out.push_str(&format!("gamma_prior={s},{r}\n"));
        }
        if let Some(l0) = self.lambda0 {
            out.push_str(&format!("lambda0={l0}\n"));
        }
        out.push_str(&format!("pi_prior={},{}\n", self.pi_prior.0, self.pi_prior.1));
        out.push_str(&format!("iterations={}\n", self.iterations));
        out.push_str(&format!("burn_in={}\n", self.burn_in));
        out.push_str(&format!("thin={}\n", self.thin));
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!(
            "proposal_scales={},{}\n",
            self.proposal_scales.0, self.proposal_scales.1
        ));
        out.push_str(&format!("effect_prior_sigma={}\n", self.effect_prior_sigma));
        out.push_str(&format!("aux_components={}\n", self.aux_components));
        out
    }
}

fn parse_pair(value: &str, key: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::config(format!(
            "{key} expects two comma-separated numbers, got '{value}'"
        )));
    }
    let a = parts[0]
        .parse::<f64>()
        .map_err(|_| Error::config(format!("invalid number '{}' for {key}", parts[0])))?;
    let b = parts[1]
        .parse::<f64>()
        .map_err(|_| Error::config(format!("invalid number '{}' for {key}", parts[1])))?;
    Ok((a, b))
}

/// Parse the flat key=value config format. Unknown keys are an error.
pub fn parse_config(text: &str) -> Result<ModelConfig> {
    let mut cfg = ModelConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {}: expected key=value, got '{line}'", i + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad_num = || Error::config(format!("invalid number '{value}' for {key}"));
        match key {
            "concentration" => cfg.concentration = value.parse().map_err(|_| bad_num())?,
            "gamma_prior" => cfg.gamma_prior = Some(parse_pair(value, key)?),
            "lambda0" => cfg.lambda0 = Some(value.parse().map_err(|_| bad_num())?),
            "pi_prior" => cfg.pi_prior = parse_pair(value, key)?,
            "iterations" => cfg.iterations = value.parse().map_err(|_| bad_num())?,
            "burn_in" => cfg.burn_in = value.parse().map_err(|_| bad_num())?,
            "thin" => cfg.thin = value.parse().map_err(|_| bad_num())?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad_num())?,
            "proposal_scales" => cfg.proposal_scales = parse_pair(value, key)?,
            "effect_prior_sigma" => {
                cfg.effect_prior_sigma = if value == "inf" {
                    f64::INFINITY
                } else {
                    value.parse().map_err(|_| bad_num())?
                }
            }
            "aux_components" => cfg.aux_components = value.parse().map_err(|_| bad_num())?,
            other => {
                return Err(Error::config(format!("unknown config key '{other}'")));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ModelConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let cfg = parse_config(
            "concentration = 2.0\n\
             gamma_prior = 1.0, 2718.0\n\
             lambda0 = 3.68e-7\n\
             pi_prior = 1,1\n\
             iterations = 100\n\
             burn_in = 50\n\
             thin = 5\n\
             seed = 42\n\
             proposal_scales = 0.2, 0.3\n\
             aux_components = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.concentration, 2.0);
        assert_eq!(cfg.gamma_prior, Some((1.0, 2718.0)));
        assert_eq!(cfg.lambda0, Some(3.68e-7));
        assert_eq!(cfg.n_records(), 10);
        assert_eq!(cfg.aux_components, 4);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_schedules() {
        assert!(parse_config("not_a_key=1\n").is_err());
        assert!(parse_config("iterations=10\nburn_in=10\n").is_err());
        assert!(parse_config("thin=0\n").is_err());
    }

    #[test]
    fn echo_reparses_to_same_config() {
        let cfg = parse_config("lambda0=1e-6\nseed=9\niterations=200\nburn_in=20\n").unwrap();
        let echoed = parse_config(&cfg.echo()).unwrap();
        assert_eq!(cfg, echoed);
    }

    #[test]
    fn gamma_prior_default_centers_on_crude_rate() {
        let cfg = ModelConfig::default();
        let (s, r) = cfg.resolved_gamma_prior(4e-7);
        assert_eq!(s, 1.0);
        assert_eq!(r, 4e-7);
    }
}
