//! Pairwise 2×2 co-occurrence counts over a population of informants.
//!
//! Cell naming follows the row attribute `a` and column attribute `b`:
//! `n11` = a∧b, `n10` = a∧¬b, `n01` = ¬a∧b, `n00` = ¬a∧¬b.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Deserialize;
use thiserror::Error;

use crate::validation::{Severity, ValidationReport};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StudyError {
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("row {row}: expected 6 fields (a, b, n11, n10, n01, n00), found {found}")]
    FieldCount { row: usize, found: usize },
    #[error("row {row}: count {value:?} is negative")]
    Negative { row: usize, value: String },
    #[error("row {row}: count {value:?} is not an integer")]
    BadCount { row: usize, value: String },
    #[error("row {row}: inconsistent n_total: cells sum to {found}, first pair sums to {expected}")]
    InconsistentTotal { row: usize, expected: u64, found: u64 },
    #[error("pair ({0}, {1}) listed more than once")]
    DuplicatePair(String, String),
    #[error("pair ({0}, {1}) is missing")]
    MissingPair(String, String),
    #[error("pair pairs attribute {0:?} with itself")]
    SelfPair(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("informant {informant:?} uses undeclared attribute {label:?}")]
    UnknownRecordTerm { informant: String, label: String },
    #[error("duplicate informant id {0:?}")]
    DuplicateInformant(String),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("study has no pairs")]
    NoPairs,
    #[error("n_total must be at least 1")]
    ZeroTotal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairContingency {
    pub a: String,
    pub b: String,
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl PairContingency {
    pub fn new(a: impl Into<String>, b: impl Into<String>, [n11, n10, n01, n00]: [u64; 4]) -> Self {
        Self { a: a.into(), b: b.into(), n11, n10, n01, n00 }
    }

    pub fn cells(&self) -> [u64; 4] {
        [self.n11, self.n10, self.n01, self.n00]
    }

    pub fn n_total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    /// n(a)
    pub fn margin_a(&self) -> u64 {
        self.n11 + self.n10
    }

    /// n(b)
    pub fn margin_b(&self) -> u64 {
        self.n11 + self.n01
    }

    pub fn margin_not_a(&self) -> u64 {
        self.n01 + self.n00
    }

    pub fn margin_not_b(&self) -> u64 {
        self.n10 + self.n00
    }

    /// The same table read with `b` as the row attribute.
    pub fn transposed(&self) -> Self {
        Self { a: self.b.clone(), b: self.a.clone(), n11: self.n11, n10: self.n01, n01: self.n10, n00: self.n00 }
    }

    /// Every cell multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        let [n11, n10, n01, n00] = self.cells().map(|n| n * k);
        Self { a: self.a.clone(), b: self.b.clone(), n11, n10, n01, n00 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoOccurrenceStudy {
    attributes: Vec<String>,
    n_total: u64,
    /// Oriented so that `a` precedes `b` in `attributes`, sorted by that order.
    pairs: Vec<PairContingency>,
}

impl CoOccurrenceStudy {
    /// Assembles a study, orienting and sorting pairs canonically.
    ///
    /// Only structural problems (unknown or repeated labels, zero total) are
    /// rejected. Count consistency and coverage are left to [`validate_study`].
    pub fn from_pairs(attributes: Vec<String>, n_total: u64, pairs: Vec<PairContingency>) -> Result<Self, StudyError> {
        if n_total == 0 {
            return Err(StudyError::ZeroTotal);
        }
        let index: HashMap<&str, usize> = attributes.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let position =
            |label: &str| index.get(label).copied().ok_or_else(|| StudyError::UnknownAttribute(label.to_owned()));
        let mut keyed = BTreeMap::new();
        for pair in pairs {
            let (i, j) = (position(&pair.a)?, position(&pair.b)?);
            if i == j {
                return Err(StudyError::SelfPair(pair.a));
            }
            let (key, pair) = if i < j { ((i, j), pair) } else { ((j, i), pair.transposed()) };
            if keyed.contains_key(&key) {
                return Err(StudyError::DuplicatePair(pair.a, pair.b));
            }
            keyed.insert(key, pair);
        }
        Ok(Self { attributes, n_total, pairs: keyed.into_values().collect() })
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn pairs(&self) -> &[PairContingency] {
        &self.pairs
    }

    /// Counts for (a, b), transposed if the study stores them as (b, a).
    pub fn pair(&self, a: &str, b: &str) -> Option<PairContingency> {
        self.pairs.iter().find_map(|p| {
            if p.a == a && p.b == b {
                Some(p.clone())
            } else if p.a == b && p.b == a {
                Some(p.transposed())
            } else {
                None
            }
        })
    }

    /// n(attribute) read from the first pair containing it.
    pub fn marginal(&self, attribute: &str) -> Option<u64> {
        self.pairs.iter().find_map(|p| {
            if p.a == attribute {
                Some(p.margin_a())
            } else if p.b == attribute {
                Some(p.margin_b())
            } else {
                None
            }
        })
    }

    /// Pair-table CSV, parseable by [`parse_pair_tables`].
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(["a", "b", "n11", "n10", "n01", "n00"]).expect("in-memory write");
        for p in &self.pairs {
            let counts = p.cells().map(|n| n.to_string());
            writer
                .write_record([p.a.as_str(), p.b.as_str()].into_iter().chain(counts.iter().map(String::as_str)))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// One informant and the set of terms they used.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct UsageRecord {
    pub informant: String,
    pub terms: Vec<String>,
}

/// Line-delimited JSON objects `{"informant": ..., "terms": [...]}`.
pub fn parse_usage_records(text: &str) -> Result<Vec<UsageRecord>, StudyError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| StudyError::Record { line: i + 1, message: e.to_string() })
        })
        .collect()
}

/// Attribute labels in order of first use across `records`.
pub fn record_attributes(records: &[UsageRecord]) -> Vec<String> {
    let mut seen = HashSet::new();
    records.iter().flat_map(|r| r.terms.iter()).filter(|t| seen.insert(t.as_str())).cloned().collect()
}

pub fn from_usage_records<S: AsRef<str>>(
    records: &[UsageRecord],
    attributes: &[S],
) -> Result<CoOccurrenceStudy, StudyError> {
    if records.is_empty() {
        return Err(StudyError::ZeroTotal);
    }
    let attributes: Vec<String> = attributes.iter().map(|a| a.as_ref().to_owned()).collect();
    let index: HashMap<&str, usize> = attributes.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut informants = HashSet::new();
    let mut usage = Vec::with_capacity(records.len());
    for record in records {
        if !informants.insert(record.informant.as_str()) {
            return Err(StudyError::DuplicateInformant(record.informant.clone()));
        }
        let mut used = vec![false; attributes.len()];
        for term in &record.terms {
            let i = *index.get(term.as_str()).ok_or_else(|| StudyError::UnknownRecordTerm {
                informant: record.informant.clone(),
                label: term.clone(),
            })?;
            used[i] = true;
        }
        usage.push(used);
    }
    let mut pairs = Vec::new();
    for i in 0..attributes.len() {
        for j in i + 1..attributes.len() {
            let mut cells = [0u64; 4];
            for used in &usage {
                let cell = match (used[i], used[j]) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                cells[cell] += 1;
            }
            pairs.push(PairContingency::new(attributes[i].clone(), attributes[j].clone(), cells));
        }
    }
    CoOccurrenceStudy::from_pairs(attributes, records.len() as u64, pairs)
}

/// Rows of `a,b,n11,n10,n01,n00`; an optional header row and `#` comments
/// are skipped. The row attribute is `a`.
pub fn parse_pair_tables(text: &str) -> Result<CoOccurrenceStudy, StudyError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut attributes: Vec<String> = Vec::new();
    let mut pairs = Vec::new();
    let mut n_total = None;
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| StudyError::Csv(e.to_string()))?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if row == 1 && record.get(2) == Some("n11") {
            continue;
        }
        if record.len() != 6 {
            return Err(StudyError::FieldCount { row, found: record.len() });
        }
        let mut cells = [0u64; 4];
        for (c, value) in record.iter().skip(2).enumerate() {
            cells[c] = match value.parse::<i64>() {
                Ok(v) if v < 0 => return Err(StudyError::Negative { row, value: value.to_owned() }),
                Ok(v) => v as u64,
                Err(_) => return Err(StudyError::BadCount { row, value: value.to_owned() }),
            };
        }
        let pair = PairContingency::new(&record[0], &record[1], cells);
        let total = pair.n_total();
        match n_total {
            None => n_total = Some(total),
            Some(expected) if expected != total => {
                return Err(StudyError::InconsistentTotal { row, expected, found: total })
            }
            Some(_) => {}
        }
        if pair.a == pair.b {
            return Err(StudyError::SelfPair(pair.a));
        }
        let key = if pair.a < pair.b { (pair.a.clone(), pair.b.clone()) } else { (pair.b.clone(), pair.a.clone()) };
        if !seen.insert(key) {
            return Err(StudyError::DuplicatePair(pair.a, pair.b));
        }
        for label in [&pair.a, &pair.b] {
            if !attributes.contains(label) {
                attributes.push(label.clone());
            }
        }
        pairs.push(pair);
    }
    let n_total = n_total.ok_or(StudyError::NoPairs)?;
    let study = CoOccurrenceStudy::from_pairs(attributes, n_total, pairs)?;
    if let Some((a, b)) = missing_pairs(&study).into_iter().next() {
        return Err(StudyError::MissingPair(a, b));
    }
    Ok(study)
}

fn missing_pairs(study: &CoOccurrenceStudy) -> Vec<(String, String)> {
    let attrs = study.attributes();
    let present: HashSet<(&str, &str)> = study.pairs().iter().map(|p| (p.a.as_str(), p.b.as_str())).collect();
    let mut missing = Vec::new();
    for i in 0..attrs.len() {
        for j in i + 1..attrs.len() {
            if !present.contains(&(attrs[i].as_str(), attrs[j].as_str())) {
                missing.push((attrs[i].clone(), attrs[j].clone()));
            }
        }
    }
    missing
}

/// Checks per-pair totals, cross-pair marginal agreement for every
/// attribute, and full pair coverage. An empty report means valid.
///
/// Reference note for the bundled data: the prose narration of the first
/// pair gives 538 for the n00 cell, while the pair table prints 553; only
/// 553 sums to 768 and is what the bundled file carries.
pub fn validate_study(study: &CoOccurrenceStudy) -> ValidationReport {
    let mut report = ValidationReport::default();
    let pair_label = |p: &PairContingency| format!("({}, {})", p.a, p.b);
    for p in study.pairs() {
        if p.n_total() != study.n_total() {
            report.push(
                Severity::Error,
                pair_label(p),
                format!("cells sum to {}, expected n_total {}", p.n_total(), study.n_total()),
            );
        }
    }
    for attr in study.attributes() {
        let seen: Vec<(String, u64)> = study
            .pairs()
            .iter()
            .filter_map(|p| {
                if &p.a == attr {
                    Some((pair_label(p), p.margin_a()))
                } else if &p.b == attr {
                    Some((pair_label(p), p.margin_b()))
                } else {
                    None
                }
            })
            .collect();
        if seen.windows(2).any(|w| w[0].1 != w[1].1) {
            let detail: Vec<String> = seen.iter().map(|(label, n)| format!("{n} in {label}")).collect();
            report.push(
                Severity::Error,
                attr.clone(),
                format!("marginal inconsistent across pairs: {}", detail.join(", ")),
            );
        }
    }
    for (a, b) in missing_pairs(study) {
        report.push(Severity::Error, format!("({a}, {b})"), "pair missing from study");
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn rec(id: &str, terms: &[&str]) -> UsageRecord {
        UsageRecord { informant: id.into(), terms: terms.iter().map(|t| t.to_string()).collect() }
    }

    #[test]
    fn hand_counted_records() {
        let records = vec![rec("u1", &["a", "b"]), rec("u2", &["a"]), rec("u3", &[])];
        let study = from_usage_records(&records, &["a", "b"]).unwrap();
        assert_eq!(study.n_total(), 3);
        assert_eq!(study.pair("a", "b").unwrap().cells(), [1, 1, 0, 1]);
        assert!(validate_study(&study).is_empty());
    }

    #[test]
    fn empty_records_rejected() {
        assert_eq!(from_usage_records::<&str>(&[], &["a"]).unwrap_err(), StudyError::ZeroTotal);
    }

    #[test]
    fn unknown_record_term_named() {
        let err = from_usage_records(&[rec("u7", &["a", "z"])], &["a", "b"]).unwrap_err();
        assert_eq!(err, StudyError::UnknownRecordTerm { informant: "u7".into(), label: "z".into() });
    }

    #[test]
    fn duplicate_informant_rejected() {
        let err = from_usage_records(&[rec("u1", &["a"]), rec("u1", &[])], &["a", "b"]).unwrap_err();
        assert_eq!(err, StudyError::DuplicateInformant("u1".into()));
    }

    #[test]
    fn marginal_witness_for_bundled_study() {
        // informant i uses attribute k iff i < n(k)
        let marginals = [130u64, 185, 193, 149, 108, 116];
        let records: Vec<UsageRecord> = (0..768u64)
            .map(|i| UsageRecord {
                informant: format!("u{i}"),
                terms: fixtures::CONTEXT_ATTRIBUTES
                    .iter()
                    .zip(marginals)
                    .filter(|(_, n)| i < *n)
                    .map(|(a, _)| a.to_string())
                    .collect(),
            })
            .collect();
        let study = from_usage_records(&records, &fixtures::CONTEXT_ATTRIBUTES).unwrap();
        assert!(validate_study(&study).is_empty());
        let bundled = fixtures::bundled_study();
        for attr in fixtures::CONTEXT_ATTRIBUTES {
            assert_eq!(study.marginal(attr), bundled.marginal(attr), "{attr}");
        }
    }

    #[test]
    fn parses_bundled_pairs() {
        let study = fixtures::bundled_study();
        assert_eq!(study.n_total(), 768);
        assert_eq!(study.attributes(), fixtures::CONTEXT_ATTRIBUTES);
        assert_eq!(study.pairs().len(), 15);
        assert_eq!(study.pair("The Sign", "The number").unwrap().cells(), [100, 85, 30, 553]);
    }

    #[test]
    fn single_pair_total() {
        let study = parse_pair_tables("a,b,10,10,10,10\n").unwrap();
        assert_eq!(study.n_total(), 40);
        assert_eq!(study.attributes(), ["a", "b"]);
    }

    #[test]
    fn inconsistent_total_rejected() {
        let err = parse_pair_tables("a,b,10,10,10,10\na,c,10,10,10,11\nb,c,10,10,10,10\n").unwrap_err();
        assert!(err.to_string().contains("inconsistent n_total"));
    }

    #[test]
    fn negative_duplicate_and_missing_pairs_rejected() {
        assert!(matches!(parse_pair_tables("a,b,-1,10,10,10\n"), Err(StudyError::Negative { row: 1, .. })));
        assert!(matches!(parse_pair_tables("a,b,1,1,1,1\nb,a,1,1,1,1\n"), Err(StudyError::DuplicatePair(..))));
        assert_eq!(
            parse_pair_tables("a,b,1,1,1,1\nb,c,1,1,1,1\n").unwrap_err(),
            StudyError::MissingPair("a".into(), "c".into())
        );
    }

    #[test]
    fn reversed_orientation_is_canonicalized() {
        let study = parse_pair_tables("a,b,1,2,3,4\nc,a,5,1,3,1\nb,c,4,2,4,0\n").unwrap();
        assert_eq!(study.pairs()[1].a, "a");
        assert_eq!(study.pairs()[1].cells(), [5, 3, 1, 1]);
    }

    #[test]
    fn bundled_marginals_consistent() {
        let study = fixtures::bundled_study();
        assert!(validate_study(&study).is_empty());
        let expected = [130u64, 185, 193, 149, 108, 116];
        for (attr, n) in fixtures::CONTEXT_ATTRIBUTES.iter().zip(expected) {
            for p in study.pairs() {
                if p.a == *attr {
                    assert_eq!(p.margin_a(), n);
                } else if p.b == *attr {
                    assert_eq!(p.margin_b(), n);
                }
            }
        }
    }

    #[test]
    fn perturbed_cell_flags_marginal() {
        let study = fixtures::bundled_study();
        let pairs: Vec<_> = study
            .pairs()
            .iter()
            .cloned()
            .map(|mut p| {
                if p.a == "The Sign" && p.b == "The letters" {
                    p.n11 = 151;
                }
                p
            })
            .collect();
        let broken = CoOccurrenceStudy::from_pairs(study.attributes().to_vec(), 768, pairs).unwrap();
        let report = validate_study(&broken);
        assert!(report.mentions("The Sign"));
        assert!(report.mentions("(The Sign, The letters)"));
    }

    #[test]
    fn missing_pair_flagged() {
        let study = CoOccurrenceStudy::from_pairs(
            vec!["a".into(), "b".into(), "c".into()],
            4,
            vec![PairContingency::new("a", "b", [1, 1, 1, 1]), PairContingency::new("b", "c", [1, 1, 1, 1])],
        )
        .unwrap();
        assert!(validate_study(&study).mentions("(a, c)"));
    }

    #[test]
    fn usage_records_jsonl() {
        let text = "{\"informant\": \"u1\", \"terms\": [\"a\", \"b\"]}\n\n{\"informant\": \"u2\", \"terms\": []}\n";
        let records = parse_usage_records(text).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(record_attributes(&records), ["a", "b"]);
        assert!(matches!(parse_usage_records("{oops}\n"), Err(StudyError::Record { line: 1, .. })));
    }
}
