//! Deterministic DOT and tabular renderings.
//!
//! Everything here is pure formatting: identical inputs give identical
//! bytes, every document ends with a newline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bayes::PosteriorConfig;
use crate::cooccurrence::CoOccurrenceStudy;
use crate::fixtures::PublishedReference;
use crate::implicative::{loevinger_quad, Band, HIndex, ImplicativeGraph, Thresholds};
use crate::lattice::{ConceptLattice, ImplicationNet};

/// Printed index tolerance for the discrepancy appendix.
pub const INDEX_TOLERANCE: f64 = 0.01;
/// Printed limit tolerance; the posterior model behind them is not known.
pub const LIMIT_TOLERANCE: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeStyle {
    Solid,
    Dashed,
    Dotted,
}

impl EdgeStyle {
    fn dot(self) -> &'static str {
        match self {
            EdgeStyle::Solid => "solid",
            EdgeStyle::Dashed => "dashed",
            EdgeStyle::Dotted => "dotted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderStyle {
    pub q_implication: EdgeStyle,
    pub tendency: EdgeStyle,
    pub absence: EdgeStyle,
    /// Draw mutual q-implications as one double-headed edge.
    pub merge_equivalences: bool,
    /// Append the credibility limit to edge labels when present.
    pub show_limits: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            q_implication: EdgeStyle::Solid,
            tendency: EdgeStyle::Dashed,
            absence: EdgeStyle::Dotted,
            merge_equivalences: true,
            show_limits: true,
        }
    }
}

impl RenderStyle {
    pub fn for_band(&self, band: Band) -> EdgeStyle {
        match band {
            Band::QImplication => self.q_implication,
            Band::Tendency => self.tendency,
            Band::Absence => self.absence,
        }
    }
}

/// Two decimals, never `-0.00`.
pub fn fixed2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_owned()
    } else {
        s
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

pub trait ToDot {
    fn to_dot(&self, style: &RenderStyle) -> String;
}

pub fn to_dot<G: ToDot + ?Sized>(graph: &G, style: &RenderStyle) -> String {
    graph.to_dot(style)
}

impl ToDot for ImplicativeGraph {
    fn to_dot(&self, style: &RenderStyle) -> String {
        let mut out = String::new();
        let name = self.stage.name();
        writeln!(out, "digraph {name} {{").unwrap();
        writeln!(
            out,
            "  graph [rankdir=LR, label={}];",
            quote(&format!("{name} implicative graph, H >= {}", fixed2(self.thresholds.edge_min)))
        )
        .unwrap();
        writeln!(out, "  node [shape=box];").unwrap();
        let mut nodes: Vec<&str> = self.nodes.iter().map(String::as_str).collect();
        nodes.sort_unstable();
        for n in nodes {
            writeln!(out, "  {};", quote(n)).unwrap();
        }

        let by_key: BTreeMap<(&str, &str), _> =
            self.edges.iter().map(|e| ((e.from.as_str(), e.to.as_str()), e)).collect();
        let label = |h: f64, limit: Option<f64>| match limit {
            Some(l) if style.show_limits => format!("{} ({})", fixed2(h), fixed2(l)),
            _ => fixed2(h),
        };
        for (&(from, to), edge) in &by_key {
            let reverse = by_key.get(&(to, from));
            let mutual = style.merge_equivalences
                && edge.band == Band::QImplication
                && reverse.is_some_and(|r| r.band == Band::QImplication);
            if mutual {
                if from > to {
                    continue;
                }
                let back = reverse.unwrap();
                writeln!(
                    out,
                    "  {} -> {} [dir=both, style={}, label={}];",
                    quote(from),
                    quote(to),
                    style.q_implication.dot(),
                    quote(&format!("{} / {}", label(edge.h, edge.limit), label(back.h, back.limit)))
                )
                .unwrap();
            } else {
                writeln!(
                    out,
                    "  {} -> {} [style={}, label={}];",
                    quote(from),
                    quote(to),
                    style.for_band(edge.band).dot(),
                    quote(&label(edge.h, edge.limit))
                )
                .unwrap();
            }
        }
        out.push_str("}\n");
        out
    }
}

impl ToDot for ImplicationNet {
    fn to_dot(&self, style: &RenderStyle) -> String {
        let mut out = String::from("digraph implications {\n");
        out.push_str("  graph [rankdir=LR, label=\"attribute implication net\"];\n");
        out.push_str("  node [shape=ellipse];\n");
        let mut nodes: Vec<&str> = self.nodes.iter().map(String::as_str).collect();
        nodes.sort_unstable();
        for n in nodes {
            writeln!(out, "  {};", quote(n)).unwrap();
        }
        let mut edges: Vec<_> = self.edges.iter().collect();
        edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        for e in edges {
            let line = if e.force == 1.0 { style.q_implication } else { style.tendency };
            writeln!(
                out,
                "  {} -> {} [style={}, label={}];",
                quote(&e.from),
                quote(&e.to),
                line.dot(),
                quote(&fixed2(e.force))
            )
            .unwrap();
        }
        out.push_str("}\n");
        out
    }
}

impl ToDot for ConceptLattice {
    fn to_dot(&self, style: &RenderStyle) -> String {
        let mut out = String::from("digraph lattice {\n");
        out.push_str("  graph [rankdir=BT, label=\"concept lattice\"];\n");
        out.push_str("  node [shape=box];\n");
        for (i, c) in self.concepts.iter().enumerate() {
            let label = format!("{{{}}}\n{{{}}}", c.extent.join(", "), c.intent.join(", "));
            writeln!(out, "  c{i} [label={}];", quote(&label)).unwrap();
        }
        let mut edges = self.cover_edges.clone();
        edges.sort_unstable();
        for (lower, upper) in edges {
            writeln!(out, "  c{lower} -> c{upper} [style={}, arrowhead=none];", style.q_implication.dot()).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

/// One row of the credibility-limit table.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub from: String,
    pub to: String,
    pub h_point: f64,
    pub eta_lower: Option<f64>,
    pub retained: bool,
    pub note: Option<String>,
}

/// Joins a descriptive graph with its filtered counterpart, one row per
/// descriptive edge.
pub fn limit_rows(descriptive: &ImplicativeGraph, inductive: &ImplicativeGraph) -> Vec<LimitRow> {
    descriptive
        .edges
        .iter()
        .map(|e| {
            if let Some(kept) = inductive.edge(&e.from, &e.to) {
                LimitRow {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    h_point: kept.h,
                    eta_lower: kept.limit,
                    retained: true,
                    note: None,
                }
            } else {
                let dropped = inductive.skipped.iter().find(|s| s.from == e.from && s.to == e.to);
                LimitRow {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    h_point: e.h,
                    eta_lower: dropped.and_then(|s| s.limit),
                    retained: false,
                    note: dropped.map(|s| s.reason.clone()),
                }
            }
        })
        .collect()
}

/// The documents of one reporting run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportSet {
    pub h_matrix_csv: String,
    pub h_matrix_text: String,
    pub limits_csv: Option<String>,
    pub limits_text: Option<String>,
    pub appendix: String,
}

fn header(title: &str, thresholds: &Thresholds, config: Option<&PosteriorConfig>) -> String {
    let mut h = format!("# implinet {title}\n# thresholds: {thresholds}\n");
    match config {
        Some(cfg) => writeln!(h, "# posterior: {cfg}").unwrap(),
        None => h.push_str("# credibility limits: not computed (no Bayesian stage)\n"),
    }
    h
}

fn index_cell(i: HIndex, digits: usize) -> String {
    match i {
        HIndex::Value(v) if digits == 2 => fixed2(v),
        HIndex::Value(v) => format!("{v:.digits$}"),
        HIndex::Undefined(_) => "NA".to_owned(),
    }
}

/// Upper-triangular grid of 2×2 index blocks; `None` above the diagonal.
fn index_grid(study: &CoOccurrenceStudy, digits: usize) -> Vec<Vec<String>> {
    let attrs = study.attributes();
    let cols = &attrs[1.min(attrs.len())..];
    let mut rows = Vec::new();
    let mut head = vec![String::new()];
    for c in cols {
        head.push(c.clone());
        head.push(String::new());
    }
    rows.push(head);
    for (i, row_attr) in attrs.iter().enumerate().take(attrs.len().saturating_sub(1)) {
        let mut top = vec![row_attr.clone()];
        let mut bottom = vec![String::new()];
        for (j, col_attr) in cols.iter().enumerate() {
            if j < i {
                top.extend([String::new(), String::new()]);
                bottom.extend([String::new(), String::new()]);
                continue;
            }
            let q = study.pair(row_attr, col_attr).and_then(|p| loevinger_quad(&p).ok());
            match q {
                Some(q) => {
                    top.push(index_cell(q.excl, digits));
                    top.push(index_cell(q.ab, digits));
                    bottom.push(index_cell(q.ba, digits));
                    bottom.push(index_cell(q.disj, digits));
                }
                None => {
                    top.extend(["NA".to_owned(), "NA".to_owned()]);
                    bottom.extend(["NA".to_owned(), "NA".to_owned()]);
                }
            }
        }
        rows.push(top);
        rows.push(bottom);
    }
    rows
}

fn csv_rows(rows: &[Vec<String>]) -> String {
    let mut writer =
        csv::WriterBuilder::new().flexible(true).terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        writer.write_record(r).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn aligned(rows: &[Vec<String>]) -> String {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0; width];
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pad = widths[i] - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn appendix(
    study: &CoOccurrenceStudy,
    limits: Option<&[LimitRow]>,
    thresholds: &Thresholds,
    config: Option<&PosteriorConfig>,
    reference: Option<&PublishedReference>,
) -> String {
    let mut out = header("discrepancy appendix", thresholds, config);
    let Some(reference) = reference else {
        out.push_str("# no published reference values supplied\n");
        return out;
    };
    let mut mismatches = Vec::new();
    for printed in &reference.indices {
        let computed = study
            .pair(&printed.a, &printed.b)
            .and_then(|p| loevinger_quad(&p).ok())
            .and_then(|q| q.get(printed.cell).value());
        let matches = computed.is_some_and(|c| (round2(c) - printed.value).abs() <= INDEX_TOLERANCE + 1e-9);
        if !matches {
            mismatches.push((printed, computed));
        }
    }
    writeln!(
        out,
        "# printed indices: {} of {} reproduced within {INDEX_TOLERANCE}",
        reference.indices.len() - mismatches.len(),
        reference.indices.len()
    )
    .unwrap();
    out.push_str("# kind,a,b,cell,printed,recomputed\n");
    for (printed, computed) in mismatches {
        writeln!(
            out,
            "index,{},{},{},{},{}",
            printed.a,
            printed.b,
            printed.cell.name(),
            fixed2(printed.value),
            computed.map_or_else(|| "NA".to_owned(), fixed2)
        )
        .unwrap();
    }

    let Some(limits) = limits else {
        out.push_str("# printed limits: not compared (no Bayesian stage)\n");
        return out;
    };
    let anchors: Vec<_> = reference.limits.iter().filter(|l| l.direction.is_some()).collect();
    let mut off = Vec::new();
    for anchor in &anchors {
        let (from, to) = anchor.direction.as_ref().unwrap();
        let computed = limits.iter().find(|r| &r.from == from && &r.to == to).and_then(|r| r.eta_lower);
        if !computed.is_some_and(|c| (c - anchor.value).abs() <= LIMIT_TOLERANCE) {
            off.push((anchor, from, to, computed));
        }
    }
    writeln!(
        out,
        "# printed limits: {} of {} alignable anchors reproduced within {LIMIT_TOLERANCE}",
        anchors.len() - off.len(),
        anchors.len()
    )
    .unwrap();
    out.push_str("# kind,from,to,printed,recomputed\n");
    for (anchor, from, to, computed) in off {
        writeln!(
            out,
            "limit,{from},{to},{:.3},{}",
            anchor.value,
            computed.map_or_else(|| "NA".to_owned(), |c| format!("{c:.3}"))
        )
        .unwrap();
    }
    out.push_str("# printed limits whose position matches no directed index\n");
    out.push_str("# kind,row,slot,printed\n");
    for cell in reference.limits.iter().filter(|l| l.direction.is_none()) {
        writeln!(out, "limit-unaligned,{},{},{:.3}", cell.row, cell.slot, cell.value).unwrap();
    }
    out
}

/// Index matrix, limit tables and discrepancy appendix for one run.
///
/// `limits` is `None` when the Bayesian stage did not run; the limit
/// tables are then omitted and the headers say so.
pub fn report(
    study: &CoOccurrenceStudy,
    descriptive: &ImplicativeGraph,
    limits: Option<&[LimitRow]>,
    thresholds: &Thresholds,
    config: Option<&PosteriorConfig>,
    reference: Option<&PublishedReference>,
) -> ReportSet {
    let config = if limits.is_some() { config } else { None };
    let matrix_header = header("Loevinger indices", thresholds, None);

    let mut h_matrix_csv = matrix_header.clone();
    h_matrix_csv.push_str(&csv_rows(&index_grid(study, 4)));

    let mut h_matrix_text = matrix_header;
    writeln!(h_matrix_text, "# N = {}", study.n_total()).unwrap();
    h_matrix_text.push_str(&aligned(&index_grid(study, 2)));
    h_matrix_text.push_str("\npair relations\n");
    let facts: Vec<Vec<String>> =
        descriptive.pair_facts.iter().map(|f| vec![f.a.clone(), f.b.clone(), f.relation.to_string()]).collect();
    h_matrix_text.push_str(&aligned(&facts));
    if !descriptive.skipped.is_empty() {
        h_matrix_text.push_str("\nskipped edges\n");
        for s in &descriptive.skipped {
            writeln!(h_matrix_text, "{} -> {}: {}", s.from, s.to, s.reason).unwrap();
        }
    }

    let (limits_csv, limits_text) = match limits {
        Some(rows) => {
            let head = header("credibility limits", thresholds, config);
            let mut csv_out = head.clone();
            let mut table = vec![vec![
                "from".to_owned(),
                "to".to_owned(),
                "h_point".to_owned(),
                "eta_lower".to_owned(),
                "retained".to_owned(),
            ]];
            let mut text_table = vec![vec![
                "from".to_owned(),
                "to".to_owned(),
                "H".to_owned(),
                "limit".to_owned(),
                "retained".to_owned(),
            ]];
            for r in rows {
                let yes = if r.retained { "yes" } else { "no" }.to_owned();
                table.push(vec![
                    r.from.clone(),
                    r.to.clone(),
                    format!("{:.4}", r.h_point),
                    r.eta_lower.map_or_else(|| "NA".to_owned(), |l| format!("{l:.4}")),
                    yes.clone(),
                ]);
                text_table.push(vec![
                    r.from.clone(),
                    r.to.clone(),
                    fixed2(r.h_point),
                    r.eta_lower.map_or_else(|| "NA".to_owned(), |l| format!("{l:.3}")),
                    yes,
                ]);
            }
            csv_out.push_str(&csv_rows(&table));
            let mut text = head;
            text.push_str(&aligned(&text_table));
            (Some(csv_out), Some(text))
        }
        None => (None, None),
    };

    ReportSet {
        h_matrix_csv,
        h_matrix_text,
        limits_csv,
        limits_text,
        appendix: appendix(study, limits, thresholds, config, reference),
    }
}
