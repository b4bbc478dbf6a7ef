use serde::{Deserialize, Serialize};

/// One bootstrapping round as tabulated for the dashboard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter_num: u32,
    pub candidates_predicted: usize,
    pub tp: usize,
    pub fp: usize,
    /// `None` when no candidate was reviewed.
    pub precision: Option<f64>,
    /// `precision` under [`format_precision`].
    pub precision_display: String,
    pub corpus_total_after: usize,
}

impl IterationRecord {
    /// Builds a record from review counts; every reviewed candidate joins the corpus.
    pub fn new(iter_num: u32, tp: usize, fp: usize, corpus_total_before: usize) -> Self {
        let precision = iteration_precision(tp, fp);
        Self {
            iter_num,
            candidates_predicted: tp + fp,
            tp,
            fp,
            precision,
            precision_display: format_precision(precision),
            corpus_total_after: corpus_total_before + tp + fp,
        }
    }

    pub fn check_invariants(&self, corpus_total_before: usize) -> Result<(), String> {
        if self.tp + self.fp != self.candidates_predicted {
            return Err(format!("tp + fp = {} but {} candidates", self.tp + self.fp, self.candidates_predicted));
        }
        if self.precision != iteration_precision(self.tp, self.fp) {
            return Err(format!("precision {:?} does not match counts", self.precision));
        }
        if self.corpus_total_after != corpus_total_before + self.candidates_predicted {
            return Err(format!("total {} != {} + {}", self.corpus_total_after, corpus_total_before, self.candidates_predicted));
        }
        Ok(())
    }
}

/// `tp / (tp + fp)`, or `None` when nothing was reviewed.
pub fn iteration_precision(tp: usize, fp: usize) -> Option<f64> {
    (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64)
}

/// Exact zero prints as `0.0`; other values get two decimals, or three when
/// two would show `0.00`. Undefined precision prints as `-`.
pub fn format_precision(p: Option<f64>) -> String {
    match p {
        None => "-".to_string(),
        Some(0.0) => "0.0".to_string(),
        Some(p) => {
            let two = format!("{p:.2}");
            if two == "0.00" {
                format!("{p:.3}")
            } else {
                two
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_cases() {
        assert!((iteration_precision(1, 749).unwrap() - 0.001_333).abs() < 1e-6);
        assert_eq!(format_precision(iteration_precision(1, 749)), "0.001");
        assert_eq!(iteration_precision(0, 790), Some(0.0));
        assert_eq!(format_precision(iteration_precision(0, 790)), "0.0");
        assert_eq!(iteration_precision(0, 0), None);
        assert_eq!(format_precision(None), "-");
        assert_eq!(format_precision(Some(0.119_195)), "0.12");
    }

    #[test]
    fn third_iteration_shape() {
        let r = IterationRecord::new(3, 1, 795, 6300);
        assert_eq!(r.candidates_predicted, 796);
        assert_eq!(r.corpus_total_after, 7096);
        assert_eq!(r.precision_display, "0.001");
        r.check_invariants(6300).unwrap();
    }
}
