//! JSON verification reports.
//!
//! Deterministic given (id, seed, configuration): timing lives in a single
//! excluded `timing` field so the rest of the report is byte-stable.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct TrialStats {
    pub attempted: u32,
    pub resampled: u32,
    pub passed: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub point: Vec<(String, String)>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub id: String,
    pub anchor: String,
    pub regime: String,
    pub n: usize,
    #[serde(rename = "box")]
    pub bounds: String,
    pub trials: TrialStats,
    pub failures: Vec<Failure>,
    pub residuals: Vec<String>,
    pub seed: u64,
    pub version: String,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.trials.passed == self.trials.attempted
    }
}

/// A whole run: one report per verification task, plus excluded timing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub reports: Vec<VerificationReport>,
    pub all_passed: bool,
    /// Excluded from the determinism contract.
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Timing {
    pub generated_at_ms: u128,
    pub wall_ms: u128,
}

impl RunReport {
    pub fn new(reports: Vec<VerificationReport>) -> Self {
        let all_passed = reports.iter().all(|r| r.passed());
        RunReport {
            reports,
            all_passed,
            timing: Timing::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// The deterministic portion: identical configs and seeds must agree on
    /// this byte-for-byte.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialization");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_is_excluded_from_deterministic_json() {
        let mut a = RunReport::new(vec![]);
        let mut b = RunReport::new(vec![]);
        a.timing.wall_ms = 123;
        b.timing.wall_ms = 456;
        assert_eq!(a.deterministic_json(), b.deterministic_json());
        assert_ne!(a.to_json(), b.to_json());
    }
}
