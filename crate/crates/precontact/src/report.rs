//! Results of sample-based identity checks.

/// One checked identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRecord {
    pub id: String,
    /// The identity being checked, written out.
    pub anchor: String,
    pub max_residual: f64,
    pub threshold: f64,
    pub samples: usize,
    /// Negative controls pass when the residual exceeds the threshold.
    pub expect_failure: bool,
    pub pass: bool,
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(id: &str, anchor: &str, max_residual: f64, threshold: f64, samples: usize) -> Self {
        CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            max_residual,
            threshold,
            samples,
            expect_failure: false,
            // NaN never passes.
            pass: max_residual <= threshold,
            note: None,
        }
    }

    /// A negative control: passes only if the residual is above `threshold`.
    pub fn negative(id: &str, anchor: &str, max_residual: f64, threshold: f64, samples: usize) -> Self {
        CheckRecord {
            expect_failure: true,
            pass: max_residual > threshold,
            ..Self::new(id, anchor, max_residual, threshold, samples)
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Fold residuals into a maximum that propagates NaN.
pub fn max_residual(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_fails_both_ways() {
        assert!(!CheckRecord::new("a", "", f64::NAN, 1.0, 1).pass);
        assert!(!CheckRecord::negative("a", "", f64::NAN, 1.0, 1).pass);
        assert!(max_residual([1.0, f64::NAN, 2.0]).is_nan());
        assert_eq!(max_residual([1.0, 3.0, 2.0]), 3.0);
    }
}
