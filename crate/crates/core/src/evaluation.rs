//! Gold-versus-predicted scoring.

use serde::Serialize;

use crate::taxonomy::{canonical_order, FailureType};

const N: usize = FailureType::COUNT;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no (gold, predicted) pairs to evaluate")]
    EmptyInput,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
}

/// Rows are gold labels, columns predictions, both in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; N]; N],
    total: u64,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; N]; N]) -> Self {
        let total = counts.iter().flatten().sum();
        ConfusionMatrix { counts, total }
    }

    pub fn counts(&self) -> &[[u64; N]; N] {
        &self.counts
    }

    pub fn get(&self, gold: FailureType, predicted: FailureType) -> u64 {
        self.counts[gold.canonical_index()][predicted.canonical_index()]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn trace(&self) -> u64 {
        (0..N).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, gold: FailureType) -> u64 {
        self.counts[gold.canonical_index()].iter().sum()
    }

    pub fn column_sum(&self, predicted: FailureType) -> u64 {
        let j = predicted.canonical_index();
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.trace() == self.total
    }

    /// CSV with canonical display texts as header row and first column.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["gold \\ predicted".to_string()];
        header.extend(canonical_order().iter().map(|f| f.display_text().to_string()));
        wtr.write_record(&header).expect("in-memory write");
        for gold in canonical_order() {
            let mut row = vec![gold.display_text().to_string()];
            row.extend(self.counts[gold.canonical_index()].iter().map(u64::to_string));
            wtr.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

pub fn build_confusion(
    pairs: impl IntoIterator<Item = (FailureType, FailureType)>,
) -> Result<ConfusionMatrix, EvalError> {
    let mut counts = [[0u64; N]; N];
    let mut total = 0;
    for (gold, predicted) in pairs {
        counts[gold.canonical_index()][predicted.canonical_index()] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(EvalError::EmptyInput);
    }
    Ok(ConfusionMatrix { counts, total })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: FailureType,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    /// `None` when the class never occurs in the gold labels.
    pub recall: Option<f64>,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Micro accuracy, trace over total.
    pub accuracy: f64,
    /// Display form: half-up rounded integer percent.
    pub accuracy_percent: u64,
    /// Mean per-class recall over classes with gold support.
    pub macro_accuracy: f64,
    pub correct: u64,
    pub total: u64,
    /// Canonical order.
    pub per_class: Vec<ClassMetrics>,
}

/// `numerator / denominator` as a half-up rounded integer percent, computed
/// in integers so values such as 68/90 cannot land on the wrong side of .5.
pub fn percent_half_up(numerator: u64, denominator: u64) -> u64 {
    (200 * numerator + denominator) / (2 * denominator)
}

/// Same as [`percent_half_up`] but in tenths of a percent.
pub fn permille_half_up(numerator: u64, denominator: u64) -> u64 {
    (2000 * numerator + denominator) / (2 * denominator)
}

pub fn format_fraction(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

impl MetricsReport {
    pub fn accuracy_display(&self) -> String {
        format!("{}%", self.accuracy_percent)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    if cm.total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let per_class: Vec<ClassMetrics> = canonical_order()
        .into_iter()
        .map(|label| {
            let diag = cm.get(label, label);
            let support = cm.row_sum(label);
            ClassMetrics {
                label,
                precision: ratio(diag, cm.column_sum(label)),
                recall: ratio(diag, support),
                support,
            }
        })
        .collect();
    let recalls: Vec<f64> = per_class.iter().filter_map(|c| c.recall).collect();
    let correct = cm.trace();
    Ok(MetricsReport {
        accuracy: correct as f64 / cm.total as f64,
        accuracy_percent: percent_half_up(correct, cm.total),
        macro_accuracy: recalls.iter().sum::<f64>() / recalls.len() as f64,
        correct,
        total: cm.total,
        per_class,
    })
}

/// Cell-wise `b - a`.
pub fn diff_matrices(a: &ConfusionMatrix, b: &ConfusionMatrix) -> [[i64; N]; N] {
    let mut delta = [[0i64; N]; N];
    for (g, row) in delta.iter_mut().enumerate() {
        for (p, cell) in row.iter_mut().enumerate() {
            *cell = b.counts[g][p] as i64 - a.counts[g][p] as i64;
        }
    }
    delta
}
