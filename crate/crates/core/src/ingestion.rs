//! Incident dataset loading and validation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::taxonomy::{normalize_exact, FailureType, Industry};

/// One software-failure report as extracted upstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub id: String,
    pub cause: String,
    pub industry: Industry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<FailureType>,
    /// Unrecognised JSONL fields, carried through untouched.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl IncidentRecord {
    pub fn new(id: impl Into<String>, cause: impl Into<String>, industry: &str) -> Self {
        IncidentRecord {
            id: id.into(),
            cause: cause.into(),
            industry: Industry::or_unknown(industry),
            gold_label: None,
            extra: Map::new(),
        }
    }

    pub fn with_gold(mut self, label: FailureType) -> Self {
        self.gold_label = Some(label);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<IncidentRecord>,
    pub source_path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Jsonl,
    Csv,
}

impl DatasetFormat {
    /// Guess from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> DatasetFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(DatasetFormat::Jsonl),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(format!("unknown dataset format '{other}' (expected jsonl or csv)")),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Jsonl => "jsonl",
            DatasetFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line_no}: malformed record: {reason}")]
    MalformedRecord { line_no: u64, reason: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("record {id:?}: gold label {raw:?} is not a canonical failure type")]
    InvalidGoldLabel { id: String, raw: String },
    #[error("cannot read {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn malformed(line_no: u64, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedRecord {
        line_no,
        reason: reason.into(),
    }
}

/// Field values before validation; shared by the JSONL and CSV readers.
struct RawRecord {
    id: Option<String>,
    cause: Option<String>,
    industry: Option<String>,
    gold_label: Option<String>,
    extra: Map<String, Value>,
}

fn build_record(line_no: u64, raw: RawRecord) -> Result<IncidentRecord, IngestError> {
    let id = raw
        .id
        .filter(|id| !id.trim().is_empty())
        .ok_or_else(|| malformed(line_no, "missing or empty 'id'"))?;
    let cause = raw
        .cause
        .filter(|c| !c.trim().is_empty())
        .ok_or_else(|| malformed(line_no, "missing or empty 'cause'"))?;
    let industry = raw
        .industry
        .ok_or_else(|| malformed(line_no, "missing 'industry'"))?;
    let gold_label = match raw.gold_label {
        Some(text) if !text.trim().is_empty() => Some(
            normalize_exact(&text)
                .ok_or_else(|| IngestError::InvalidGoldLabel { id: id.clone(), raw: text })?,
        ),
        _ => None,
    };
    Ok(IncidentRecord {
        id,
        cause,
        industry: Industry::or_unknown(&industry),
        gold_label,
        extra: raw.extra,
    })
}

fn take_string(
    obj: &mut Map<String, Value>,
    field: &str,
    line_no: u64,
) -> Result<Option<String>, IngestError> {
    match obj.remove(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(Value::Number(n)) if field == "id" => Ok(Some(n.to_string())),
        Some(_) => Err(malformed(line_no, format!("field '{field}' must be a string"))),
    }
}

fn parse_jsonl_line(line_no: u64, line: &str) -> Result<IncidentRecord, IngestError> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| malformed(line_no, format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(malformed(line_no, "record must be a JSON object"));
    };
    let raw = RawRecord {
        id: take_string(&mut obj, "id", line_no)?,
        cause: take_string(&mut obj, "cause", line_no)?,
        industry: take_string(&mut obj, "industry", line_no)?,
        gold_label: take_string(&mut obj, "gold_label", line_no)?,
        extra: obj,
    };
    build_record(line_no, raw)
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<IncidentRecord>, IngestError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| malformed(line_no, format!("unreadable line: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_jsonl_line(line_no, &line)?);
    }
    Ok(records)
}

pub fn read_csv<R: io::Read>(reader: R) -> Result<Vec<IncidentRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| malformed(1, format!("unreadable header: {e}")))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (id_col, cause_col, industry_col, gold_col) =
        (column("id"), column("cause"), column("industry"), column("gold_label"));

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line_no = row.position().map_or(0, |p| p.line());
        let get = |col: Option<usize>| col.and_then(|c| row.get(c)).map(str::to_string);
        let mut extra = Map::new();
        for (i, name) in headers.iter().enumerate() {
            if Some(i) != id_col && Some(i) != cause_col && Some(i) != industry_col && Some(i) != gold_col {
                if let Some(v) = row.get(i) {
                    extra.insert(name.to_string(), Value::String(v.to_string()));
                }
            }
        }
        let raw = RawRecord {
            id: get(id_col),
            cause: get(cause_col),
            industry: get(industry_col),
            gold_label: get(gold_col),
            extra,
        };
        records.push(build_record(line_no, raw)?);
    }
    Ok(records)
}

fn check_unique(records: &[IncidentRecord]) -> Result<(), IngestError> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(IngestError::DuplicateId(r.id.clone()));
        }
    }
    Ok(())
}

/// Loads a dataset, preserving file order.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    let records = match format {
        DatasetFormat::Jsonl => read_jsonl(BufReader::new(file))?,
        DatasetFormat::Csv => read_csv(BufReader::new(file))?,
    };
    Dataset::from_records(records, path)
}

impl Dataset {
    pub fn from_records(
        records: Vec<IncidentRecord>,
        source_path: impl Into<PathBuf>,
    ) -> Result<Dataset, IngestError> {
        check_unique(&records)?;
        Ok(Dataset {
            records,
            source_path: source_path.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_gold_labels(&self) -> bool {
        self.records.iter().any(|r| r.gold_label.is_some())
    }

    pub fn get(&self, id: &str) -> Option<&IncidentRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

/// Serializes records as JSONL, one object per line.
pub fn to_jsonl(records: &[IncidentRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialization is infallible"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub total: usize,
    /// Keyed by industry display name.
    pub per_industry: BTreeMap<String, usize>,
    pub gold_count: usize,
    pub warnings: Vec<String>,
}

pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut by_key: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
    let mut gold_count = 0;
    let mut warnings = Vec::new();
    for r in &ds.records {
        let entry = by_key.entry(r.industry.key()).or_insert((r.industry.name(), 0));
        entry.1 += 1;
        if r.gold_label.is_some() {
            gold_count += 1;
        }
        if r.industry == Industry::unknown() {
            warnings.push(format!("record {:?} has no industry", r.id));
        }
    }
    if !ds.records.is_empty() && gold_count > 0 && gold_count < ds.records.len() {
        warnings.push(format!(
            "{} of {} records carry a gold label",
            gold_count,
            ds.records.len()
        ));
    }
    ValidationReport {
        total: ds.records.len(),
        per_industry: by_key
            .into_values()
            .map(|(name, n)| (name.to_string(), n))
            .collect(),
        gold_count,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    #[test]
    fn jsonl_record_with_gold_label() {
        let line = r#"{"id":"a1","cause":"Faulty software in the helicopter","industry":"Transportation","gold_label":"Functionality Bug"}"#;
        let recs = read_jsonl(Cursor::new(line)).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].gold_label, Some(FailureType::FunctionalityBug));
        assert_eq!(recs[0].industry.name(), "Transportation");
    }

    #[test]
    fn empty_cause_is_malformed() {
        let line = r#"{"id":"a1","cause":"   ","industry":"Finance"}"#;
        let err = read_jsonl(Cursor::new(line)).unwrap_err();
        assert!(matches!(err, IngestError::MalformedRecord { line_no: 1, .. }), "{err}");

        let csv = "id,cause,industry,gold_label\nx,,Finance,\n";
        let err = read_csv(Cursor::new(csv)).unwrap_err();
        assert!(matches!(err, IngestError::MalformedRecord { line_no: 2, .. }), "{err}");
    }

    #[test]
    fn missing_industry_is_malformed_but_blank_is_unknown() {
        let err = read_jsonl(Cursor::new(r#"{"id":"a","cause":"c"}"#)).unwrap_err();
        assert!(matches!(err, IngestError::MalformedRecord { .. }));
        let recs = read_jsonl(Cursor::new(r#"{"id":"a","cause":"c","industry":" "}"#)).unwrap();
        assert_eq!(recs[0].industry, Industry::unknown());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let csv = "id,cause,industry,gold_label\nx,one,Finance,\nx,two,Finance,\n";
        let recs = read_csv(Cursor::new(csv)).unwrap();
        let err = Dataset::from_records(recs, "mem").unwrap_err();
        assert!(matches!(err, IngestError::DuplicateId(ref id) if id == "x"));
    }

    #[test]
    fn gold_labels_are_not_rescued() {
        let line = r#"{"id":"g","cause":"c","industry":"Finance","gold_label":"probably an Outage"}"#;
        let err = read_jsonl(Cursor::new(line)).unwrap_err();
        assert!(matches!(err, IngestError::InvalidGoldLabel { ref id, .. } if id == "g"));

        let line = r#"{"id":"g","cause":"c","industry":"Finance","gold_label":" outage. "}"#;
        assert_eq!(
            read_jsonl(Cursor::new(line)).unwrap()[0].gold_label,
            Some(FailureType::Outage)
        );
    }

    #[test]
    fn csv_quoting_and_extra_columns() {
        let csv = "id,cause,industry,gold_label,source\n\
                   r1,\"Crash, then \"\"restart\"\"\nloop\",Healthcare,Outage,news\n";
        let recs = read_csv(Cursor::new(csv)).unwrap();
        assert_eq!(recs[0].cause, "Crash, then \"restart\"\nloop");
        assert_eq!(recs[0].extra.get("source"), Some(&Value::String("news".into())));
    }

    #[test]
    fn extra_jsonl_fields_pass_through() {
        let line = r#"{"id":"a","cause":"c","industry":"Finance","url":"http://x","year":2020}"#;
        let recs = read_jsonl(Cursor::new(line)).unwrap();
        let out = to_jsonl(&recs);
        assert!(out.contains(r#""url":"http://x""#));
        assert!(out.contains(r#""year":2020"#));
    }

    #[test]
    fn missing_file_is_io_failure() {
        let err = load_dataset(Path::new("/nonexistent/x.jsonl"), DatasetFormat::Jsonl).unwrap_err();
        assert!(matches!(err, IngestError::IoFailure { .. }));
    }

    #[test]
    fn validation_counts() {
        let empty = Dataset::from_records(vec![], "mem").unwrap();
        let report = validate_dataset(&empty);
        assert_eq!(report.total, 0);
        assert!(report.per_industry.is_empty());

        let ds = Dataset::from_records(
            vec![
                IncidentRecord::new("1", "a", "Finance"),
                IncidentRecord::new("2", "b", "Government"),
                IncidentRecord::new("3", "c", "finance"),
            ],
            "mem",
        )
        .unwrap();
        let report = validate_dataset(&ds);
        assert_eq!(
            report.per_industry,
            BTreeMap::from([("Finance".to_string(), 2), ("Government".to_string(), 1)])
        );
    }

    #[test]
    fn validation_counts_gold_labels() {
        let records = (0..90)
            .map(|i| IncidentRecord::new(i.to_string(), "c", "Finance").with_gold(FailureType::Outage))
            .collect();
        let report = validate_dataset(&Dataset::from_records(records, "mem").unwrap());
        assert_eq!(report.gold_count, 90);
        assert!(report.warnings.is_empty());
    }

    fn arb_record() -> impl Strategy<Value = IncidentRecord> {
        (
            "[a-z0-9]{1,8}",
            "[ -~]{0,20}[a-zA-Z][ -~\n,\"]{0,20}",
            prop::sample::select(vec!["Finance", "Healthcare", "Government", "transportation"]),
            prop::option::of(prop::sample::select(FailureType::ALL.to_vec())),
        )
            .prop_map(|(id, cause, industry, gold)| {
                let mut r = IncidentRecord::new(id, cause, industry);
                r.gold_label = gold;
                r
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip_is_fixed_point(records in prop::collection::vec(arb_record(), 0..12)) {
            let text = to_jsonl(&records);
            let loaded = read_jsonl(Cursor::new(text.as_bytes())).unwrap();
            prop_assert_eq!(&loaded, &records);
            prop_assert_eq!(to_jsonl(&loaded), text);
        }

        #[test]
        fn validation_totals_permutation_invariant(
            records in prop::collection::vec(arb_record(), 0..20),
            seed in any::<u64>(),
        ) {
            let mut records: Vec<_> = records.into_iter().enumerate()
                .map(|(i, mut r)| { r.id = i.to_string(); r }).collect();
            let a = validate_dataset(&Dataset::from_records(records.clone(), "mem").unwrap());
            let n = records.len().max(1);
            records.rotate_left((seed as usize) % n);
            records.reverse();
            let b = validate_dataset(&Dataset::from_records(records, "mem").unwrap());
            prop_assert_eq!(a.per_industry.values().sum::<usize>(), a.total);
            prop_assert_eq!(a.total, b.total);
            prop_assert_eq!(a.gold_count, b.gold_count);
            prop_assert_eq!(
                a.per_industry.values().collect::<Vec<_>>(),
                b.per_industry.values().collect::<Vec<_>>()
            );
        }
    }
}
