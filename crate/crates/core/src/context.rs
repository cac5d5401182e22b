//! Symbolic informant tables and their binarization into formal contexts.
//!
//! A symbolic table has one row per system object and one column per
//! informant; each cell holds the term that informant used for the object.
//! Binarizing turns every distinct term into an attribute and marks the
//! objects it was used for.

use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::validation::{Severity, ValidationReport};

/// Header written in the top-left cell of every emitted context matrix.
pub const CORNER_LABEL: &str = "object";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("input has no header row")]
    MissingHeader,
    #[error("header column {column} is empty")]
    EmptyHeader { column: usize },
    #[error("duplicate informant id {0:?}")]
    DuplicateInformant(String),
    #[error("duplicate object label {0:?}")]
    DuplicateObject(String),
    #[error("duplicate attribute label {0:?}")]
    DuplicateAttribute(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {column}: empty cell")]
    EmptyCell { row: usize, column: usize },
    #[error("row {row}, column {column}: expected 0 or 1, found {value:?}")]
    NotBinary { row: usize, column: usize, value: String },
    #[error("attribute order: {0}")]
    AttributeOrder(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicTable {
    objects: Vec<String>,
    informants: Vec<String>,
    /// Row-major, `objects.len() * informants.len()` terms.
    cells: Vec<String>,
}

impl SymbolicTable {
    pub fn new(objects: Vec<String>, informants: Vec<String>, cells: Vec<String>) -> Result<Self, ContextError> {
        check_unique(&informants, ContextError::DuplicateInformant)?;
        check_unique(&objects, ContextError::DuplicateObject)?;
        for (row, chunk) in cells.chunks(informants.len().max(1)).enumerate() {
            if let Some(column) = chunk.iter().position(|c| c.trim().is_empty()) {
                return Err(ContextError::EmptyCell { row: row + 1, column: column + 1 });
            }
        }
        if cells.len() != objects.len() * informants.len() {
            return Err(ContextError::Csv(format!(
                "{} cells do not fill a {}x{} grid",
                cells.len(),
                objects.len(),
                informants.len()
            )));
        }
        Ok(Self { objects, informants, cells })
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn informants(&self) -> &[String] {
        &self.informants
    }

    pub fn cell(&self, object: usize, informant: usize) -> &str {
        &self.cells[object * self.informants.len() + informant]
    }

    pub fn row(&self, object: usize) -> &[String] {
        let width = self.informants.len();
        &self.cells[object * width..(object + 1) * width]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalContext {
    objects: Vec<String>,
    attributes: Vec<String>,
    /// Attribute set of each object.
    rows: Vec<FixedBitSet>,
    /// Object set of each attribute.
    columns: Vec<FixedBitSet>,
}

impl FormalContext {
    /// Builds a context from a dense incidence matrix, one row per object.
    ///
    /// Labels are not checked for uniqueness here; [`validate_context`]
    /// reports duplicates.
    pub fn new(objects: Vec<String>, attributes: Vec<String>, incidence: &[Vec<bool>]) -> Self {
        assert_eq!(incidence.len(), objects.len(), "one incidence row per object");
        let mut rows = Vec::with_capacity(objects.len());
        let mut columns = vec![FixedBitSet::with_capacity(objects.len()); attributes.len()];
        for (o, row) in incidence.iter().enumerate() {
            assert_eq!(row.len(), attributes.len(), "one incidence cell per attribute");
            let mut bits = FixedBitSet::with_capacity(attributes.len());
            for (a, &set) in row.iter().enumerate() {
                if set {
                    bits.insert(a);
                    columns[a].insert(o);
                }
            }
            rows.push(bits);
        }
        Self { objects, attributes, rows, columns }
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn incidence(&self, object: usize, attribute: usize) -> bool {
        self.rows[object].contains(attribute)
    }

    pub fn object_row(&self, object: usize) -> &FixedBitSet {
        &self.rows[object]
    }

    pub fn attribute_column(&self, attribute: usize) -> &FixedBitSet {
        &self.columns[attribute]
    }

    pub fn object_index(&self, label: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == label)
    }

    pub fn attribute_index(&self, label: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == label)
    }

    pub fn matrix(&self) -> Vec<Vec<bool>> {
        (0..self.objects.len()).map(|o| (0..self.attributes.len()).map(|a| self.incidence(o, a)).collect()).collect()
    }

    /// Same incidence with the attribute columns permuted into `order`.
    pub fn with_attribute_order<S: AsRef<str>>(&self, order: &[S]) -> Result<Self, ContextError> {
        if order.len() != self.attributes.len() {
            return Err(ContextError::AttributeOrder(format!(
                "expected {} labels, got {}",
                self.attributes.len(),
                order.len()
            )));
        }
        let mut taken = vec![false; self.attributes.len()];
        let mut permutation = Vec::with_capacity(order.len());
        for label in order {
            let key = normalize_term(label.as_ref());
            let idx = self
                .attributes
                .iter()
                .position(|a| normalize_term(a) == key)
                .ok_or_else(|| ContextError::AttributeOrder(format!("unknown attribute {:?}", label.as_ref())))?;
            if std::mem::replace(&mut taken[idx], true) {
                return Err(ContextError::AttributeOrder(format!("attribute {:?} listed twice", label.as_ref())));
            }
            permutation.push(idx);
        }
        let attributes = permutation.iter().map(|&i| self.attributes[i].clone()).collect();
        let matrix: Vec<Vec<bool>> =
            (0..self.objects.len()).map(|o| permutation.iter().map(|&a| self.incidence(o, a)).collect()).collect();
        Ok(Self::new(self.objects.clone(), attributes, &matrix))
    }

    /// Renders the context as a 0/1 CSV matrix with the symbolic table's
    /// header convention.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let header = std::iter::once(CORNER_LABEL).chain(self.attributes.iter().map(String::as_str));
        writer.write_record(header).expect("in-memory write");
        for (o, label) in self.objects.iter().enumerate() {
            let cells = (0..self.attributes.len()).map(|a| if self.incidence(o, a) { "1" } else { "0" });
            writer.write_record(std::iter::once(label.as_str()).chain(cells)).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Trim and case-fold. Plural and singular forms stay distinct.
pub fn normalize_term(term: &str) -> String {
    term.trim().to_lowercase()
}

fn check_unique(labels: &[String], err: fn(String) -> ContextError) -> Result<(), ContextError> {
    let mut seen = HashSet::new();
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(err(label.clone()));
        }
    }
    Ok(())
}

/// Header cells, then (row label, cells) per data row.
type Grid = (Vec<String>, Vec<(String, Vec<String>)>);

/// Reads a grid of trimmed cells. Row numbers in errors count data rows from 1.
fn read_grid(text: &str) -> Result<Grid, ContextError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(record) => record.map_err(|e| ContextError::Csv(e.to_string()))?,
        None => return Err(ContextError::MissingHeader),
    };
    let columns: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if let Some(i) = columns.iter().position(String::is_empty) {
        return Err(ContextError::EmptyHeader { column: i + 1 });
    }
    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| ContextError::Csv(e.to_string()))?;
        if record.len() == 1 && record.get(0) == Some("") {
            // blank line
            continue;
        }
        if record.len() != columns.len() + 1 {
            return Err(ContextError::Ragged { row, expected: columns.len() + 1, found: record.len() });
        }
        let mut cells = record.iter().map(str::to_owned);
        let label = cells.next().unwrap_or_default();
        if label.is_empty() {
            return Err(ContextError::EmptyCell { row, column: 0 });
        }
        let cells: Vec<String> = cells.collect();
        if let Some(c) = cells.iter().position(String::is_empty) {
            return Err(ContextError::EmptyCell { row, column: c + 1 });
        }
        rows.push((label, cells));
    }
    Ok((columns, rows))
}

pub fn parse_symbolic_table(text: &str) -> Result<SymbolicTable, ContextError> {
    let (informants, rows) = read_grid(text)?;
    let mut objects = Vec::with_capacity(rows.len());
    let mut cells = Vec::with_capacity(rows.len() * informants.len());
    for (label, row) in rows {
        objects.push(label);
        cells.extend(row);
    }
    SymbolicTable::new(objects, informants, cells)
}

pub fn parse_context_csv(text: &str) -> Result<FormalContext, ContextError> {
    let (attributes, rows) = read_grid(text)?;
    let mut objects = Vec::with_capacity(rows.len());
    let mut matrix = Vec::with_capacity(rows.len());
    for (r, (label, cells)) in rows.into_iter().enumerate() {
        let bits = cells
            .iter()
            .enumerate()
            .map(|(c, v)| match v.as_str() {
                "1" => Ok(true),
                "0" => Ok(false),
                _ => Err(ContextError::NotBinary { row: r + 1, column: c + 1, value: v.clone() }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        objects.push(label);
        matrix.push(bits);
    }
    Ok(FormalContext::new(objects, attributes, &matrix))
}

/// Attributes are the distinct normalized terms in first-appearance order
/// (row-major scan); each keeps the spelling of its first occurrence.
pub fn binarize(table: &SymbolicTable) -> FormalContext {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut attributes = Vec::new();
    let mut per_object = Vec::with_capacity(table.objects().len());
    for o in 0..table.objects().len() {
        let mut present = Vec::new();
        for term in table.row(o) {
            let key = normalize_term(term);
            let next = attributes.len();
            let a = *index.entry(key).or_insert_with(|| {
                attributes.push(term.trim().to_owned());
                next
            });
            present.push(a);
        }
        per_object.push(present);
    }
    let matrix: Vec<Vec<bool>> = per_object
        .iter()
        .map(|present| {
            let mut row = vec![false; attributes.len()];
            for &a in present {
                row[a] = true;
            }
            row
        })
        .collect();
    FormalContext::new(table.objects().to_vec(), attributes, &matrix)
}

/// Duplicated labels are errors; empty rows and columns are warnings.
pub fn validate_context(ctx: &FormalContext) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = HashSet::new();
    for o in ctx.objects() {
        if !seen.insert(o) {
            report.push(Severity::Error, o.clone(), "duplicate object label");
        }
    }
    let mut seen = HashSet::new();
    for a in ctx.attributes() {
        if !seen.insert(a) {
            report.push(Severity::Error, a.clone(), "duplicate attribute label");
        }
    }
    for (o, label) in ctx.objects().iter().enumerate() {
        if ctx.object_row(o).is_clear() {
            report.push(Severity::Warning, label.clone(), "object has no attributes");
        }
    }
    for (a, label) in ctx.attributes().iter().enumerate() {
        if ctx.attribute_column(a).is_clear() {
            report.push(Severity::Warning, label.clone(), "attribute column is all zero");
        }
    }
    report
}
