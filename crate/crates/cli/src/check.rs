//! Machine-readable pass/fail records produced under `--check`.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    /// Measured value the check compares.
    pub observed: f64,
    /// Bound it is compared against.
    pub threshold: f64,
    /// What would make the check pass, e.g. `observed <= threshold`.
    pub comparison: String,
    pub detail: String,
}

impl CheckRecord {
    /// `observed <= threshold`.
    pub fn le(name: &str, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckRecord {
            name: name.to_string(),
            passed: observed <= threshold,
            observed,
            threshold,
            comparison: "observed <= threshold".to_string(),
            detail: detail.into(),
        }
    }

    /// `observed >= threshold`.
    pub fn ge(name: &str, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckRecord {
            name: name.to_string(),
            passed: observed >= threshold,
            observed,
            threshold,
            comparison: "observed >= threshold".to_string(),
            detail: detail.into(),
        }
    }

    pub fn all_passed(checks: &[CheckRecord]) -> bool {
        checks.iter().all(|c| c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons_set_the_flag() {
        assert!(CheckRecord::le("a", 1.0, 2.0, "").passed);
        assert!(!CheckRecord::le("a", 3.0, 2.0, "").passed);
        assert!(CheckRecord::ge("b", 2.0, 2.0, "").passed);
        assert!(!CheckRecord::ge("b", 1.0, 2.0, "").passed);
        assert!(!CheckRecord::le("nan", f64::NAN, 2.0, "").passed);

        let checks = vec![
            CheckRecord::le("a", 1.0, 2.0, ""),
            CheckRecord::ge("b", 1.0, 2.0, ""),
        ];
        assert!(!CheckRecord::all_passed(&checks));
        assert!(CheckRecord::all_passed(&checks[..1]));
    }
}
