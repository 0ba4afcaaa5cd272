//! Experiment configuration.
//!
//! A config document is JSON whose keys are the [`ExperimentSpec`] field
//! names; any key may be omitted and falls back to the desk-scale default.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ltest::competitors::Method;
use ltest::randgen::InnovationDistribution;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Desk-scale outer replications.
pub const DESK_REPLICATIONS: usize = 500;
/// Desk-scale bootstrap replicates.
pub const DESK_B: usize = 200;
pub const FULL_REPLICATIONS: usize = 1000;
pub const FULL_B: usize = 500;

/// Design distribution of the covariate innovations, written `i`, `ii`, `iii`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Design(pub InnovationDistribution);

impl Design {
    pub const ALL: [Self; 3] = [
        Self(InnovationDistribution::StandardNormal),
        Self(InnovationDistribution::CenteredExponential),
        Self(InnovationDistribution::ScaledMixtureNormal),
    ];

    pub fn label(self) -> &'static str {
        self.0.label()
    }

    /// Position in `i, ii, iii`; used to key random streams.
    pub fn index(self) -> u64 {
        Self::ALL.iter().position(|d| *d == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Design {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        InnovationDistribution::from_label(s)
            .map(Self)
            .ok_or_else(|| format!("unknown design '{s}', expected i, ii or iii"))
    }
}

impl TryFrom<String> for Design {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Design> for String {
    fn from(d: Design) -> String {
        d.label().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub n_list: Vec<usize>,
    pub p_list: Vec<usize>,
    /// Nuisance dimension; the first `q` columns of `X` form `X_a`.
    pub q: usize,
    pub design_list: Vec<Design>,
    /// AR(1) parameter of `Σ = (ρ^{|i−j|})`.
    pub rho: f64,
    pub alpha: f64,
    pub replications: usize,
    #[serde(rename = "B")]
    pub b: usize,
    /// Signal sparsity levels; empty means a size study.
    pub s_list: Vec<usize>,
    pub signal_norm_sq: f64,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            n_list: vec![100, 200],
            p_list: vec![200, 400, 600],
            q: 5,
            design_list: Design::ALL.to_vec(),
            rho: 0.7,
            alpha: 0.05,
            replications: DESK_REPLICATIONS,
            b: DESK_B,
            s_list: Vec::new(),
            signal_norm_sq: 0.8,
            methods: Method::ALL.to_vec(),
            master_seed: 20240601,
            workers: 1,
        }
    }
}

impl ExperimentSpec {
    /// Defaults for the power sweep: one `(n, p)` cell and six sparsity levels.
    pub fn power_default() -> Self {
        Self {
            n_list: vec![100],
            p_list: vec![200],
            s_list: vec![1, 10, 20, 60, 120, 195],
            ..Self::default()
        }
    }

    /// Full-scale replication counts.
    pub fn full_scale(mut self) -> Self {
        self.replications = FULL_REPLICATIONS;
        self.b = FULL_B;
        self
    }

    pub fn is_size_study(&self) -> bool {
        self.s_list.is_empty()
    }

    /// Number of result rows the spec produces.
    pub fn row_count(&self) -> usize {
        self.n_list.len() * self.p_list.len() * self.design_list.len() * self.methods.len() * self.s_list.len().max(1)
    }

    /// Parses a JSON document on top of `base`: keys present in the
    /// document replace the corresponding fields, absent keys keep `base`.
    pub fn from_json_over(text: &str, base: &Self) -> std::result::Result<Self, String> {
        let mut merged = serde_json::to_value(base).map_err(|e| e.to_string())?;
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let serde_json::Value::Object(doc) = doc else {
            return Err("config must be a JSON object".into());
        };
        let obj = merged.as_object_mut().expect("spec serializes to an object");
        for (k, v) in doc {
            if !obj.contains_key(&k) {
                return Err(format!("unknown field `{k}`"));
            }
            obj.insert(k, v);
        }
        serde_path_to_error::deserialize(merged).map_err(|e| format!("`{}`: {}", e.path(), e.inner()))
    }

    pub fn load(path: &Path, base: &Self) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json_over(&text, base).map_err(|message| HarnessError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn validate(&self) -> Result<()> {
        fn err(field: impl Into<String>, message: impl Into<String>) -> HarnessError {
            HarnessError::config(field, message)
        }
        if self.replications < 1 {
            return Err(err("replications", "must be at least 1"));
        }
        if self.b < 1 {
            return Err(err("B", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(err("alpha", format!("{} is outside (0, 1)", self.alpha)));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(err("rho", format!("{} is outside (-1, 1)", self.rho)));
        }
        for (name, len) in [
            ("n_list", self.n_list.len()),
            ("p_list", self.p_list.len()),
            ("design_list", self.design_list.len()),
            ("methods", self.methods.len()),
        ] {
            if len == 0 {
                return Err(err(name, "must not be empty"));
            }
        }
        for (i, &n) in self.n_list.iter().enumerate() {
            if self.q >= n {
                return Err(err(format!("n_list[{i}]"), format!("n = {n} must exceed q = {}", self.q)));
            }
        }
        for (i, &p) in self.p_list.iter().enumerate() {
            if p <= self.q {
                return Err(err(format!("p_list[{i}]"), format!("p = {p} must exceed q = {}", self.q)));
            }
        }
        let min_m = self.p_list.iter().min().map_or(0, |p| p - self.q);
        for (i, &s) in self.s_list.iter().enumerate() {
            if s == 0 || s > min_m {
                return Err(err(
                    format!("s_list[{i}]"),
                    format!("s = {s} must lie in 1..={min_m} (smallest p - q)"),
                ));
            }
        }
        if !self.s_list.is_empty() && !(self.signal_norm_sq > 0.0 && self.signal_norm_sq.is_finite()) {
            return Err(err("signal_norm_sq", "must be positive and finite for a power study"));
        }
        for (name, dup) in [
            ("n_list", has_duplicate(&self.n_list)),
            ("p_list", has_duplicate(&self.p_list)),
            ("s_list", has_duplicate(&self.s_list)),
            ("design_list", has_duplicate(&self.design_list)),
            ("methods", has_duplicate(&self.methods)),
        ] {
            if let Some(i) = dup {
                return Err(err(format!("{name}[{i}]"), "duplicate entry"));
            }
        }
        Ok(())
    }
}

fn has_duplicate<T: PartialEq>(xs: &[T]) -> Option<usize> {
    (1..xs.len()).find(|&i| xs[..i].contains(&xs[i]))
}
