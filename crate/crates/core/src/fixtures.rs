//! The published example data, embedded at build time.
//!
//! `INFORMANTS_CSV` is the symbolic informant table, `CONTEXT_CSV` its binary
//! context, `PAIRS_CSV` the 2×2 co-occurrence counts over 768
//! informants. The printed index and limit tables are kept as reference
//! values for the discrepancy appendix.

use crate::cooccurrence::{parse_pair_tables, CoOccurrenceStudy};
use crate::implicative::QuadCell;

pub const INFORMANTS_CSV: &str = include_str!("../data/informants.csv");
pub const CONTEXT_CSV: &str = include_str!("../data/context.csv");
pub const PAIRS_CSV: &str = include_str!("../data/pairs.csv");
pub const PUBLISHED_INDICES_CSV: &str = include_str!("../data/published_indices.csv");
pub const PUBLISHED_LIMITS_CSV: &str = include_str!("../data/published_limits.csv");

/// Column order of the published binary context.
pub const CONTEXT_ATTRIBUTES: [&str; 6] =
    ["The number", "The Sign", "The letters", "The numbers", "The Characters", "Substantive"];

pub fn bundled_study() -> CoOccurrenceStudy {
    parse_pair_tables(PAIRS_CSV).expect("bundled pair table is valid")
}

/// One printed index: pair (a, b) in table orientation and the error cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PrintedIndex {
    pub a: String,
    pub b: String,
    pub cell: QuadCell,
    pub value: f64,
}

/// One printed credibility limit. `direction` is set only for the cells
/// whose position can be matched to a directed index.
#[derive(Debug, Clone, PartialEq)]
pub struct PrintedLimit {
    pub row: String,
    pub slot: usize,
    pub value: f64,
    pub direction: Option<(String, String)>,
}

/// Printed values the recomputed tables are checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedReference {
    pub indices: Vec<PrintedIndex>,
    pub limits: Vec<PrintedLimit>,
}

impl PublishedReference {
    pub fn bundled() -> Self {
        Self {
            indices: parse_printed_indices(PUBLISHED_INDICES_CSV),
            limits: parse_printed_limits(PUBLISHED_LIMITS_CSV),
        }
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn parse_printed_indices(text: &str) -> Vec<PrintedIndex> {
    let mut out = Vec::new();
    for record in reader(text).records() {
        let record = record.expect("bundled index table is well-formed");
        for (i, cell) in QuadCell::ALL.into_iter().enumerate() {
            out.push(PrintedIndex {
                a: record[0].to_owned(),
                b: record[1].to_owned(),
                cell,
                value: record[2 + i].parse().expect("numeric"),
            });
        }
    }
    out
}

fn parse_printed_limits(text: &str) -> Vec<PrintedLimit> {
    reader(text)
        .records()
        .map(|record| {
            let record = record.expect("bundled limit table is well-formed");
            let direction = (!record[3].is_empty()).then(|| (record[3].to_owned(), record[4].to_owned()));
            PrintedLimit {
                row: record[0].to_owned(),
                slot: record[1].parse().expect("numeric"),
                value: record[2].parse().expect("numeric"),
                direction,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shapes() {
        let reference = PublishedReference::bundled();
        assert_eq!(reference.indices.len(), 60);
        assert_eq!(reference.limits.len(), 12);
        assert_eq!(reference.limits.iter().filter(|l| l.direction.is_some()).count(), 4);
    }
}
