//! Scoring a model on a labeled split.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::dataset::{ClassRegistry, ManifestEntry};
use crate::error::{Error, Result};
use crate::network::{Mlp, CLASS_COUNT};
use crate::pipeline::file_features;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    /// `confusion[truth][prediction]`.
    pub confusion: [[usize; CLASS_COUNT]; CLASS_COUNT],
    /// Images the pipeline could not score, with the reason.
    pub failures: Vec<(PathBuf, String)>,
    pub classes: ClassRegistry,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
}

impl EvalReport {
    pub fn new(classes: ClassRegistry) -> Self {
        Self {
            total: 0,
            correct: 0,
            confusion: [[0; CLASS_COUNT]; CLASS_COUNT],
            failures: Vec::new(),
            classes,
        }
    }

    pub fn record(&mut self, truth: usize, prediction: usize) {
        self.confusion[truth][prediction] += 1;
        self.total += 1;
        if truth == prediction {
            self.correct += 1;
        }
    }

    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    /// Precision and recall per class; `0/0` counts as 0.
    pub fn per_class(&self) -> Vec<ClassMetrics> {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        (0..CLASS_COUNT)
            .map(|k| {
                let hits = self.confusion[k][k];
                let predicted: usize = self.confusion.iter().map(|row| row[k]).sum();
                let actual: usize = self.confusion[k].iter().sum();
                ClassMetrics {
                    precision: ratio(hits, predicted),
                    recall: ratio(hits, actual),
                }
            })
            .collect()
    }
}

/// Runs every entry through the full pipeline and tallies predictions.
/// Images that fail to load or segment are listed in `failures` and left
/// out of the counts.
pub fn evaluate<T: Scalar>(model: &Mlp<T>, entries: &[ManifestEntry]) -> Result<EvalReport> {
    if entries.is_empty() {
        return Err(Error::EmptySplit);
    }
    let mut report = EvalReport::new(model.classes().clone());
    for entry in entries {
        match file_features(&entry.path) {
            Ok(v) => report.record(entry.class, model.predict(&v).0),
            Err(e) => report.failures.push((entry.path.clone(), e.to_string())),
        }
    }
    Ok(report)
}

/// Summary text and a 29x29 confusion CSV with label headers.
pub fn render_report(report: &EvalReport) -> (String, Vec<u8>) {
    let mut summary = format!(
        "accuracy {:.4} ({}/{})\n",
        report.accuracy(),
        report.correct,
        report.total
    );
    for (label, m) in report.classes.labels().iter().zip(report.per_class()) {
        let _ = writeln!(
            summary,
            "{label}\tprecision {:.4}\trecall {:.4}",
            m.precision, m.recall
        );
    }
    if !report.failures.is_empty() {
        let _ = writeln!(summary, "failed {}", report.failures.len());
    }

    let mut csv = String::from("truth\\pred");
    for label in report.classes.labels() {
        csv.push(',');
        csv.push_str(label);
    }
    csv.push('\n');
    for (label, row) in report.classes.labels().iter().zip(&report.confusion) {
        csv.push_str(label);
        for n in row {
            let _ = write!(csv, ",{n}");
        }
        csv.push('\n');
    }
    (summary, csv.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn perfect_report_formatting() {
        let mut r = EvalReport::new(ClassRegistry::default());
        for k in 0..CLASS_COUNT {
            for _ in 0..5 {
                r.record(k, k);
            }
        }
        let (summary, csv) = render_report(&r);
        assert!(summary.starts_with("accuracy 1.0000 (140/140)\n"));
        let csv = String::from_utf8(csv).unwrap();
        let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 29);
        assert!(rows.iter().all(|r| r.len() == 29));
        assert_eq!(rows[0][1], "alef");
        assert_eq!(rows[28][0], "yeh");
        for i in 1..29 {
            for j in 1..29 {
                let expected = if i == j { "5" } else { "0" };
                assert_eq!(rows[i][j], expected);
            }
        }
    }

    #[test]
    fn precision_recall_with_empty_columns() {
        let mut r = EvalReport::new(ClassRegistry::default());
        r.record(0, 1);
        r.record(1, 1);
        r.record(1, 1);
        let m = r.per_class();
        assert_eq!(m[0], ClassMetrics { precision: 0.0, recall: 0.0 });
        assert_eq!(m[1].precision, 2.0 / 3.0);
        assert_eq!(m[1].recall, 1.0);
        assert_eq!(m[2], ClassMetrics { precision: 0.0, recall: 0.0 });
        assert!(render_report(&r).0.starts_with("accuracy 0.6667 (2/3)"));
    }

    #[test]
    fn empty_split_is_an_error() {
        let m = Mlp::<f64>::init(1, 2, 58).unwrap();
        assert!(matches!(evaluate(&m, &[]), Err(Error::EmptySplit)));
    }
}
