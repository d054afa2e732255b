//! Per-industry failure-type counts.

use std::collections::HashMap;

use crate::classifier::ClassificationResult;
use crate::ingestion::{Dataset, IncidentRecord};
use crate::parallel;
use crate::taxonomy::{canonical_order, FailureType, Industry};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("result for {result_id:?} paired with record {record_id:?}")]
    MismatchedPair { record_id: String, result_id: String },
    #[error("result {0:?} has no matching record in the dataset")]
    UnknownRecord(String),
    #[error("breakdown for {0} has no records")]
    EmptyBreakdown(String),
}

pub type Pair<'a> = (&'a IncidentRecord, &'a ClassificationResult);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndustryBreakdown {
    pub industry: Industry,
    /// Indexed by [`FailureType::canonical_index`]; every type is present.
    counts: [u64; FailureType::COUNT],
    total: u64,
}

impl IndustryBreakdown {
    pub fn new(industry: Industry) -> Self {
        IndustryBreakdown {
            industry,
            counts: [0; FailureType::COUNT],
            total: 0,
        }
    }

    /// Builds a breakdown from counts listed in canonical order.
    pub fn from_counts(industry: Industry, counts: [u64; FailureType::COUNT]) -> Self {
        IndustryBreakdown {
            industry,
            total: counts.iter().sum(),
            counts,
        }
    }

    pub fn add(&mut self, label: FailureType) {
        self.counts[label.canonical_index()] += 1;
        self.total += 1;
    }

    fn merge(&mut self, other: &IndustryBreakdown) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn count(&self, label: FailureType) -> u64 {
        self.counts[label.canonical_index()]
    }

    /// Counts in canonical order.
    pub fn counts(&self) -> [u64; FailureType::COUNT] {
        self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (FailureType, u64)> + '_ {
        canonical_order().into_iter().map(|ft| (ft, self.count(ft)))
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Breakdowns sorted by descending total, ties by case-folded name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BreakdownSet {
    breakdowns: Vec<IndustryBreakdown>,
}

impl BreakdownSet {
    pub fn from_breakdowns(mut breakdowns: Vec<IndustryBreakdown>) -> Self {
        breakdowns.sort_by(|a, b| {
            b.total
                .cmp(&a.total)
                .then_with(|| a.industry.key().cmp(b.industry.key()))
        });
        BreakdownSet { breakdowns }
    }

    pub fn breakdowns(&self) -> &[IndustryBreakdown] {
        &self.breakdowns
    }

    pub fn get(&self, industry: &str) -> Option<&IndustryBreakdown> {
        let wanted = Industry::new(industry)?;
        self.breakdowns.iter().find(|b| b.industry == wanted)
    }

    pub fn is_empty(&self) -> bool {
        self.breakdowns.is_empty()
    }

    pub fn len(&self) -> usize {
        self.breakdowns.len()
    }

    pub fn grand_total(&self) -> u64 {
        self.breakdowns.iter().map(IndustryBreakdown::total).sum()
    }

    /// CSV: industry, the ten canonical texts in canonical order, total.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["industry".to_string()];
        header.extend(canonical_order().iter().map(|f| f.display_text().to_string()));
        header.push("total".to_string());
        wtr.write_record(&header).expect("in-memory write");
        for b in &self.breakdowns {
            let mut row = vec![b.industry.name().to_string()];
            row.extend(b.counts.iter().map(u64::to_string));
            row.push(b.total.to_string());
            wtr.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

type Partial = HashMap<Industry, IndustryBreakdown>;

fn merge_partials(mut a: Partial, b: Partial) -> Partial {
    for (industry, breakdown) in b {
        a.entry(industry)
            .and_modify(|existing| existing.merge(&breakdown))
            .or_insert(breakdown);
    }
    a
}

fn tally(mut acc: Partial, (record, result): &Pair<'_>) -> Partial {
    acc.entry(record.industry.clone())
        .or_insert_with(|| IndustryBreakdown::new(record.industry.clone()))
        .add(result.label);
    acc
}

fn check_pairs(pairs: &[Pair<'_>]) -> Result<(), AnalyticsError> {
    match pairs.iter().find(|(rec, res)| rec.id != res.record_id) {
        Some((record, result)) => Err(AnalyticsError::MismatchedPair {
            record_id: record.id.clone(),
            result_id: result.record_id.clone(),
        }),
        None => Ok(()),
    }
}

/// Groups classified records by industry and counts labels.
pub fn aggregate(pairs: &[Pair<'_>]) -> Result<BreakdownSet, AnalyticsError> {
    check_pairs(pairs)?;
    let grouped = parallel::fold_reduce(pairs, Partial::new, tally, merge_partials);
    Ok(BreakdownSet::from_breakdowns(grouped.into_values().collect()))
}

/// Single-threaded [`aggregate`], kept as the reference path.
pub fn aggregate_sequential(pairs: &[Pair<'_>]) -> Result<BreakdownSet, AnalyticsError> {
    check_pairs(pairs)?;
    let grouped = parallel::fold_seq(pairs, Partial::new, tally);
    Ok(BreakdownSet::from_breakdowns(grouped.into_values().collect()))
}

/// Matches each result to its record by id. Records without a result
/// (failed classifications) are skipped.
pub fn pair_results<'a>(
    ds: &'a Dataset,
    results: &'a [ClassificationResult],
) -> Result<Vec<Pair<'a>>, AnalyticsError> {
    let by_id: HashMap<&str, &IncidentRecord> =
        ds.records.iter().map(|r| (r.id.as_str(), r)).collect();
    results
        .iter()
        .map(|res| {
            by_id
                .get(res.record_id.as_str())
                .map(|rec| (*rec, res))
                .ok_or_else(|| AnalyticsError::UnknownRecord(res.record_id.clone()))
        })
        .collect()
}

/// (gold, predicted) for every paired record that carries a gold label.
pub fn gold_pairs(pairs: &[Pair<'_>]) -> Vec<(FailureType, FailureType)> {
    pairs
        .iter()
        .filter_map(|(rec, res)| rec.gold_label.map(|g| (g, res.label)))
        .collect()
}

/// Most frequent label; ties go to the type earlier in canonical order.
pub fn dominant_failure(b: &IndustryBreakdown) -> Result<FailureType, AnalyticsError> {
    if b.total == 0 {
        return Err(AnalyticsError::EmptyBreakdown(b.industry.name().to_string()));
    }
    let mut best = canonical_order()[0];
    for ft in canonical_order() {
        if b.count(ft) > b.count(best) {
            best = ft;
        }
    }
    Ok(best)
}
