//! Comparison tests and the shared decision record.
//!
//! `SUM` (bootstrap-calibrated `L_m`) and `COM` (Cauchy combination of
//! `MAX` and `SUM`) are stand-ins for the published sum-type and
//! max+sum combination procedures; [`Method::is_stand_in`] marks them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adaptive::cauchy_combine;
use crate::asymptotic::{lambda_sf, ExtremeValueParams};
use crate::calibrate::{wild_bootstrap, BootstrapConfig, BootstrapResult};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::statcore::{OrderedEvidence, ResidualizedDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "MAX")]
    Max,
    #[serde(rename = "MAX_BOOT")]
    MaxBoot,
    #[serde(rename = "SUM")]
    Sum,
    #[serde(rename = "COM")]
    Com,
}

impl Method {
    pub const ALL: [Self; 5] = [Self::Cc, Self::Max, Self::MaxBoot, Self::Sum, Self::Com];

    pub fn label(self) -> &'static str {
        match self {
            Self::Cc => "CC",
            Self::Max => "MAX",
            Self::MaxBoot => "MAX_BOOT",
            Self::Sum => "SUM",
            Self::Com => "COM",
        }
    }

    pub fn is_stand_in(self) -> bool {
        matches!(self, Self::Sum | Self::Com)
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Cc => "adaptive Cauchy combination over the dyadic k-grid (bootstrap)",
            Self::Max => "max-type W_(1) - b_m against the Gumbel-type limit",
            Self::MaxBoot => "max-type L_1 calibrated by the wild bootstrap",
            Self::Sum => "stand-in sum-type test: L_m calibrated by the wild bootstrap",
            Self::Com => "stand-in combination: Cauchy combination of MAX and SUM p-values",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub meta: BTreeMap<String, String>,
}

impl TestReport {
    /// Builds a report; `reject` is always `p_value <= alpha`.
    pub fn new(method: Method, statistic: f64, p_value: f64, alpha: f64) -> Self {
        Self {
            method,
            statistic,
            p_value,
            reject: p_value <= alpha,
            alpha,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0,1)")))
    }
}

/// `W_(1) − b_m` against `Λ`; `p = 1 − Λ(W_(1) − b_m)`.
pub fn max_test_asymptotic(oe: &OrderedEvidence<f64>, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    let ev = ExtremeValueParams::new(oe.m())?;
    let stat = ev.center(oe.order_stat(1)?);
    Ok(TestReport::new(Method::Max, stat, lambda_sf(stat), alpha).with_meta("b_m", ev.b_m))
}

/// Reads the `L_m` p-value out of a bootstrap run whose grid contains `m`.
pub fn sum_test_from_bootstrap(boot: &BootstrapResult<f64>, m: usize, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    let g = boot.position(m).ok_or(Error::KOutOfRange { k: m, m })?;
    Ok(
        TestReport::new(Method::Sum, boot.observed[g], boot.p_values[g], alpha)
            .with_meta("B", boot.replications)
            .with_meta("k", m)
            .with_meta("stand_in", "true"),
    )
}

/// Reads the `L_1` p-value out of a bootstrap run whose grid contains 1.
pub fn max_boot_from_bootstrap(boot: &BootstrapResult<f64>, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    let g = boot.position(1).ok_or(Error::KOutOfRange { k: 1, m: 0 })?;
    Ok(
        TestReport::new(Method::MaxBoot, boot.observed[g], boot.p_values[g], alpha)
            .with_meta("B", boot.replications),
    )
}

pub fn sum_test_bootstrap(
    rd: &ResidualizedDesign<f64>,
    y: &[f64],
    config: &BootstrapConfig,
    alpha: f64,
    stream: StreamKey,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let m = rd.m();
    let boot = wild_bootstrap(rd, y, &[m], config, stream)?;
    Ok(sum_test_from_bootstrap(&boot, m, alpha)?.with_meta("seed", stream.raw()))
}

/// Nudges a p-value into the open unit interval. An asymptotic tail can
/// round to exactly 0 or 1 in double precision.
fn interior(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Equal-weight Cauchy combination of a max-type and a sum-type p-value.
pub fn com_test(p_max: f64, p_sum: f64, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    for (index, p) in [p_max, p_sum].into_iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::PValueOutOfRange { index, value: p });
        }
    }
    let cc = cauchy_combine(&[interior(p_max), interior(p_sum)])?;
    Ok(TestReport::new(Method::Com, cc.t_c, cc.p_c, alpha).with_meta("stand_in", "true"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotic::lambda_quantile;
    use crate::statcore::order_evidence;

    fn evidence_with_max(m: usize, max: f64) -> OrderedEvidence<f64> {
        let mut w = vec![0.5; m];
        w[3] = max;
        order_evidence(&w).unwrap()
    }

    #[test]
    fn max_test_at_critical_value() {
        let m = 195;
        let ev = ExtremeValueParams::new(m).unwrap();
        let crit = lambda_quantile(0.95);
        assert!((crit - 4.795_661).abs() < 1e-5);
        let r = max_test_asymptotic(&evidence_with_max(m, ev.b_m + crit), 0.05).unwrap();
        assert!((r.p_value - 0.05).abs() < 1e-12);
        let r = max_test_asymptotic(&evidence_with_max(m, ev.b_m + crit + 1e-9), 0.05).unwrap();
        assert!(r.reject);
        let at_center = max_test_asymptotic(&evidence_with_max(m, ev.b_m), 0.05).unwrap();
        assert!((at_center.p_value - 0.431_179_058).abs() < 1e-6);
        assert!(!at_center.reject);
        let huge = max_test_asymptotic(&evidence_with_max(m, 1e3), 0.05).unwrap();
        assert!(huge.p_value < 1e-100);
    }

    #[test]
    fn com_hand_values() {
        let r = com_test(0.5, 0.5, 0.05).unwrap();
        assert_eq!(r.p_value, 0.5);
        let r = com_test(0.01, 0.9, 0.05).unwrap();
        assert!((r.statistic - 14.371).abs() < 1e-3);
        assert!((r.p_value - 0.022_113_176).abs() < 1e-8);
        assert!(r.reject);
        let a = com_test(0.2, 0.03, 0.05).unwrap();
        let b = com_test(0.03, 0.2, 0.05).unwrap();
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn com_tolerates_boundary_p_values() {
        assert!(com_test(0.0, 0.4, 0.05).unwrap().reject);
        assert!(!com_test(1.0, 0.4, 0.05).unwrap().reject);
        assert!(com_test(-0.1, 0.4, 0.05).is_err());
    }

    #[test]
    fn report_decision_rule() {
        assert!(TestReport::new(Method::Cc, 0.0, 0.05, 0.05).reject);
        assert!(!TestReport::new(Method::Cc, 0.0, 0.050_001, 0.05).reject);
    }

    #[test]
    fn method_labels_parse() {
        for m in Method::ALL {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert_eq!("max_boot".parse::<Method>().unwrap(), Method::MaxBoot);
        assert!("EB".parse::<Method>().is_err());
        assert!(Method::Sum.is_stand_in() && !Method::Cc.is_stand_in());
    }
}
