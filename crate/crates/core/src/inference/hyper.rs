use std::fmt;
use std::str::FromStr;

use super::InferenceError;

/// How the history weights are spread over the last `S` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuScheme {
    Uniform,
    /// Weight of the slice `a` epochs back is proportional to `exp(-kappa * a)`.
    Decay { kappa: f64 },
}

impl Default for MuScheme {
    fn default() -> Self {
        MuScheme::Decay { kappa: 0.5 }
    }
}

impl fmt::Display for MuScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuScheme::Uniform => f.write_str("uniform"),
            MuScheme::Decay { kappa } => write!(f, "decay:{kappa}"),
        }
    }
}

impl FromStr for MuScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "uniform" => Ok(MuScheme::Uniform),
            "decay" => Ok(MuScheme::default()),
            other => {
                let k = other
                    .strip_prefix("decay:")
                    .or_else(|| other.strip_prefix("decay(").and_then(|r| r.strip_suffix(')')))
                    .ok_or_else(|| format!("unknown mu scheme {other:?} (uniform | decay:<kappa>)"))?;
                let kappa: f64 = k.parse().map_err(|_| format!("bad decay rate {k:?}"))?;
                Ok(MuScheme::Decay { kappa })
            }
        }
    }
}

/// How `alpha` moves between epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaEvolution {
    /// Carry the mean of `Gamma(nu * alpha, rate = nu)`, which is `alpha`.
    #[default]
    Carry,
    /// Draw from `Gamma(nu * alpha, rate = nu)`.
    Sample,
}

impl fmt::Display for AlphaEvolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaEvolution::Carry => "carry",
            AlphaEvolution::Sample => "sample",
        })
    }
}

impl FromStr for AlphaEvolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "carry" => Ok(AlphaEvolution::Carry),
            "sample" => Ok(AlphaEvolution::Sample),
            other => Err(format!("unknown alpha mode {other:?} (carry | sample)")),
        }
    }
}

/// Which post-burn-in states feed the posterior estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// The state after the final sweep.
    #[default]
    FinalSample,
    /// Mean of the estimates taken every `lag` sweeps after burn-in.
    Averaged { lag: usize },
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::FinalSample => f.write_str("final"),
            Estimator::Averaged { lag } => write!(f, "average:{lag}"),
        }
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "final" => Ok(Estimator::FinalSample),
            "average" => Ok(Estimator::Averaged { lag: 10 }),
            other => {
                let lag = other
                    .strip_prefix("average:")
                    .and_then(|l| l.parse().ok())
                    .ok_or_else(|| format!("unknown estimator {other:?} (final | average[:lag])"))?;
                Ok(Estimator::Averaged { lag })
            }
        }
    }
}

/// Model and sampler settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Sentiment labels `L`.
    pub labels: usize,
    /// Topics per label `T`.
    pub topics: usize,
    /// History window `S`, in epochs.
    pub window: usize,
    /// Symmetric concentration of the per-document sentiment mix.
    pub gamma: f64,
    /// Initial symmetric value of the per-(label, topic) topic prior.
    pub alpha_init: f64,
    /// Rate of the Gamma draw used by [`AlphaEvolution::Sample`].
    pub nu: f64,
    /// Symmetric word prior before the lexicon transformation.
    pub beta_base: f64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub mu_scheme: MuScheme,
    pub alpha_evolution: AlphaEvolution,
    /// Multiply λ into the evolved prior at every epoch, not just the first.
    pub reapply_lambda: bool,
    pub estimator: Estimator,
}

impl Default for Hyperparams {
    fn default() -> Self {
        let labels = 2;
        let topics = 5;
        Self {
            labels,
            topics,
            window: 3,
            gamma: 1.0,
            alpha_init: default_alpha(labels, topics),
            nu: 1.0,
            beta_base: 0.01,
            sweeps: 1000,
            burn_in: 200,
            seed: 0,
            mu_scheme: MuScheme::default(),
            alpha_evolution: AlphaEvolution::default(),
            reapply_lambda: false,
            estimator: Estimator::default(),
        }
    }
}

/// `50 / (L * T)`.
pub fn default_alpha(labels: usize, topics: usize) -> f64 {
    50.0 / (labels * topics) as f64
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, InferenceError> {
    value
        .trim()
        .parse()
        .map_err(|_| InferenceError::InvalidHyperparams(format!("{key}: cannot parse {value:?}")))
}

impl Hyperparams {
    /// Keys accepted by [`Hyperparams::set`], in [`Hyperparams::entries`] order.
    pub const KEYS: [&'static str; 14] = [
        "labels",
        "topics",
        "window",
        "gamma",
        "alpha_init",
        "nu",
        "beta_base",
        "sweeps",
        "burn_in",
        "seed",
        "mu",
        "alpha_mode",
        "reapply_lambda",
        "estimator",
    ];

    pub fn validate(&self) -> Result<(), InferenceError> {
        let fail = |m: String| Err(InferenceError::InvalidHyperparams(m));
        if self.labels < 2 {
            return fail(format!("labels must be >= 2, got {}", self.labels));
        }
        if self.topics < 1 {
            return fail("topics must be >= 1".into());
        }
        if self.window < 1 {
            return fail("window must be >= 1".into());
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("alpha_init", self.alpha_init),
            ("nu", self.nu),
            ("beta_base", self.beta_base),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.burn_in >= self.sweeps {
            return fail(format!(
                "burn_in ({}) must be smaller than sweeps ({})",
                self.burn_in, self.sweeps
            ));
        }
        if let MuScheme::Decay { kappa } = self.mu_scheme {
            if !(kappa >= 0.0 && kappa.is_finite()) {
                return fail(format!("decay rate must be finite and >= 0, got {kappa}"));
            }
        }
        if self.estimator == (Estimator::Averaged { lag: 0 }) {
            return fail("averaging lag must be >= 1".into());
        }
        Ok(())
    }

    /// Sets one field from its textual key/value form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), InferenceError> {
        let bad = |m: String| InferenceError::InvalidHyperparams(format!("{key}: {m}"));
        match key {
            "labels" => self.labels = parse(key, value)?,
            "topics" => self.topics = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "alpha_init" => self.alpha_init = parse(key, value)?,
            "nu" => self.nu = parse(key, value)?,
            "beta_base" => self.beta_base = parse(key, value)?,
            "sweeps" => self.sweeps = parse(key, value)?,
            "burn_in" => self.burn_in = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "mu" => self.mu_scheme = value.parse().map_err(bad)?,
            "alpha_mode" => self.alpha_evolution = value.parse().map_err(bad)?,
            "reapply_lambda" => self.reapply_lambda = parse(key, value)?,
            "estimator" => self.estimator = value.parse().map_err(bad)?,
            _ => return Err(InferenceError::InvalidHyperparams(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every field as a `(key, value)` pair. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("labels", self.labels.to_string()),
            ("topics", self.topics.to_string()),
            ("window", self.window.to_string()),
            ("gamma", self.gamma.to_string()),
            ("alpha_init", self.alpha_init.to_string()),
            ("nu", self.nu.to_string()),
            ("beta_base", self.beta_base.to_string()),
            ("sweeps", self.sweeps.to_string()),
            ("burn_in", self.burn_in.to_string()),
            ("seed", self.seed.to_string()),
            ("mu", self.mu_scheme.to_string()),
            ("alpha_mode", self.alpha_evolution.to_string()),
            ("reapply_lambda", self.reapply_lambda.to_string()),
            ("estimator", self.estimator.to_string()),
        ]
    }

    /// Number of (label, topic) clusters.
    pub fn clusters(&self) -> usize {
        self.labels * self.topics
    }
}
