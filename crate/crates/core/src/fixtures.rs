//! Bundled per-industry failure counts from the published figures, and
//! helpers that expand them into classified record sets.

use crate::classifier::ClassificationResult;
use crate::ingestion::IncidentRecord;
use crate::prompting::PromptVersion;
use crate::taxonomy::{canonical_order, FailureType};

const FIGURE_CSV: &str = include_str!("../fixtures/figure_counts.csv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FigureFixture {
    pub industry: String,
    pub chart_title: String,
    /// Canonical order.
    pub counts: [u64; FailureType::COUNT],
}

/// Parses the bundled figure table. The header is checked against the
/// canonical order so a reordered file cannot silently shift columns.
pub fn figure_fixtures() -> Vec<FigureFixture> {
    let mut rdr = csv::Reader::from_reader(FIGURE_CSV.as_bytes());
    let headers = rdr.headers().expect("fixture header").clone();
    for (i, ft) in canonical_order().into_iter().enumerate() {
        assert_eq!(&headers[i + 2], ft.display_text(), "fixture column order");
    }
    rdr.records()
        .map(|row| {
            let row = row.expect("fixture row");
            let mut counts = [0u64; FailureType::COUNT];
            for (i, c) in counts.iter_mut().enumerate() {
                *c = row[i + 2].parse().expect("fixture count");
            }
            FigureFixture {
                industry: row[0].to_string(),
                chart_title: row[1].to_string(),
                counts,
            }
        })
        .collect()
}

/// Expands one fixture into records and oracle-style results whose labels
/// reproduce its counts.
pub fn expand(fixture: &FigureFixture) -> (Vec<IncidentRecord>, Vec<ClassificationResult>) {
    let prefix: String = fixture.industry.to_lowercase().chars().take(4).collect();
    let mut records = Vec::new();
    let mut results = Vec::new();
    for (ft, &n) in canonical_order().iter().zip(&fixture.counts) {
        for _ in 0..n {
            let id = format!("{prefix}-{:04}", records.len() + 1);
            records.push(IncidentRecord::new(
                &id,
                format!("{} incident {} attributed to {}", fixture.industry, records.len() + 1, ft),
                &fixture.industry,
            ));
            results.push(ClassificationResult {
                record_id: id,
                raw_reply: ft.display_text().to_string(),
                label: *ft,
                non_canonical: false,
                prompt_version: PromptVersion::V2,
                backend_kind: "fixture".to_string(),
                cached: false,
            });
        }
    }
    (records, results)
}

/// All seven fixtures expanded and concatenated.
pub fn figure_result_set() -> (Vec<IncidentRecord>, Vec<ClassificationResult>) {
    let mut records = Vec::new();
    let mut results = Vec::new();
    for f in figure_fixtures() {
        let (r, c) = expand(&f);
        records.extend(r);
        results.extend(c);
    }
    (records, results)
}
