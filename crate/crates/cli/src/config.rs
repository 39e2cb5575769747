//! Plain `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, and dotted prefixes group
//! related keys (`spec.family`, `const.C`). Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use logconc_core::moments::TailConstants;
use logconc_core::{BodyDescriptor, DistributionSpec};

use crate::error::CliError;

/// Every key the runner understands, with a one-line meaning.
pub const KNOWN_KEYS: &[(&str, &str)] = &[
    ("experiment", "subcommand name"),
    ("seed", "master seed (required)"),
    ("out", "output directory"),
    ("replicas", "replica count (at least 16)"),
    ("workers", "worker threads; affects scheduling only"),
    ("dims", "comma-separated dimensions"),
    ("samples", "comma-separated sample sizes"),
    ("p-grid", "sorted moment orders"),
    ("t-grid", "sorted thresholds"),
    ("eps-grid", "sorted accuracy targets"),
    ("const.C", "multiplicative constant in bound checks"),
    ("const.c", "rate constant in bound checks"),
    ("budget", "largest acceptable ratio or implied constant"),
    ("spec.family", "gaussian | product-exponential | uniform-cube | uniform-simplex | uniform-lp-ball | sconcave | oracle-uniform"),
    ("spec.isotropic", "true (default) or false"),
    ("spec.p", "lp-ball exponent"),
    ("spec.r", "s-concave tail parameter"),
    ("spec.gauge", "s-concave gauge: l2 | l1"),
    ("spec.body", "body descriptor for oracle-uniform"),
    ("spec.walk-budget", "hit-and-run steps between points for oracle-uniform"),
    ("body", "body descriptor: ball:n:r | cube:n:a | simplex:n | lpball:n:p:r | ellipsoid:a1,a2,.."),
    ("norm", "l2 | l1 | linf"),
    ("form", "paouris | small-ball | gm | sconcave"),
    ("directions", "number of directions"),
    ("thresholds", "KS thresholds for direction surveys"),
    ("theta", "comma-separated direction"),
    ("tau", "Berry-Esseen constant"),
    ("eta", "failure probability"),
    ("epsilon", "volume accuracy target or boundary step"),
    ("order", "order p of the ball body"),
    ("tol", "quadrature tolerance"),
    ("points", "number of hull points, or 'cross-polytope'"),
    ("trials", "Monte-Carlo trials"),
    ("projections", "number of random projections"),
    ("gaussian-vectors", "Gaussian vectors per expectation"),
    ("h-p", "order of the projection ratio"),
    ("h-gauge", "euclidean | forms"),
    ("pairs", "number of pairs for midpoint tests"),
    ("chains", "independent walk chains"),
    ("max-oracle-calls", "oracle budget for volume runs"),
];

fn is_known(key: &str) -> bool {
    KNOWN_KEYS.iter().any(|(k, _)| *k == key)
}

/// Validated key-value configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
            let k = k.trim();
            if cfg.values.contains_key(k) {
                return Err(CliError::Config(format!("line {}: duplicate key {k:?}", i + 1)));
            }
            cfg.set(k, v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !is_known(key) {
            return Err(CliError::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// `key=value` from the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| CliError::Config(format!("expected key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn parse_value<T: FromStr>(&self, key: &str, v: &str) -> Result<T, CliError> {
        v.parse().map_err(|_| CliError::Config(format!("{key} = {v:?} is not valid")))
    }

    pub fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key).map(|v| self.parse_value(key, v)).transpose()
    }

    pub fn value_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.value(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.value(key)?.ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))
    }

    pub fn list<T: FromStr + PartialOrd>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let items = v
            .split(',')
            .map(|s| self.parse_value(key, s.trim()))
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err(CliError::Config(format!("{key} must not be empty")));
        }
        if key != "theta" && items.windows(2).any(|w| w[0] > w[1]) {
            return Err(CliError::Config(format!("{key} must be sorted")));
        }
        Ok(Some(items))
    }

    pub fn list_or<T: FromStr + PartialOrd>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError> {
        Ok(self.list(key)?.unwrap_or(default))
    }

    pub fn require_list<T: FromStr + PartialOrd>(&self, key: &str) -> Result<Vec<T>, CliError> {
        self.list(key)?.ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.require("seed")
    }

    /// Distribution from the `spec.*` keys in dimension `n`. Isotropic
    /// unless `spec.isotropic = false`.
    pub fn spec(&self, n: usize) -> Result<DistributionSpec, CliError> {
        let mut kv: BTreeMap<String, String> = self
            .values
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("spec.").map(|s| (s.to_string(), v.clone())))
            .collect();
        if !kv.contains_key("family") {
            return Err(CliError::Config("missing required key \"spec.family\"".into()));
        }
        kv.entry("isotropic".into()).or_insert_with(|| "true".into());
        kv.insert("n".into(), n.to_string());
        Ok(DistributionSpec::from_key_values(&kv)?)
    }

    pub fn body(&self) -> Result<BodyDescriptor, CliError> {
        let s: String = self.require("body")?;
        Ok(s.parse()?)
    }

    pub fn constants(&self) -> Result<TailConstants, CliError> {
        let d = TailConstants::default();
        Ok(TailConstants { big_c: self.value_or("const.C", d.big_c)?, small_c: self.value_or("const.c", d.small_c)? })
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_prefixes() {
        let cfg = ExperimentConfig::parse("# shell\nexperiment = shell\nseed = 7  # fixed\nspec.family = gaussian\ndims = 4, 16\n").unwrap();
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.require_list::<usize>("dims").unwrap(), vec![4, 16]);
        assert_eq!(cfg.spec(4).unwrap(), DistributionSpec::gaussian(4));
    }

    #[test]
    fn rejects_unknown_and_unsorted() {
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(CliError::Config(_))));
        let cfg = ExperimentConfig::parse("p-grid = 4, 2").unwrap();
        assert!(cfg.list::<f64>("p-grid").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn missing_seed_is_config_error() {
        let cfg = ExperimentConfig::parse("dims = 3").unwrap();
        assert!(matches!(cfg.seed(), Err(CliError::Config(_))));
    }

    #[test]
    fn display_round_trips() {
        let cfg = ExperimentConfig::parse("spec.family = uniform-lp-ball\nspec.p = 1\ndims = 8\nseed = 3").unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_string()).unwrap(), cfg);
    }
}
