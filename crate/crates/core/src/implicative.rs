//! Loevinger H indices of 2×2 tables, q-implication bands, and the
//! descriptive implicative graph.
//!
//! Every cell of a pair table is read as the counter-example cell of one
//! rule, and its index is `H = 1 - observed / expected` with the expected
//! count taken under independence of the margins:
//!
//! | component | counter-examples | rule   | denominator     |
//! |-----------|------------------|--------|-----------------|
//! | `excl`    | n11              | a → ¬b | n(a) · n(b)     |
//! | `ab`      | n10              | a → b  | n(a) · n(¬b)    |
//! | `ba`      | n01              | b → a  | n(¬a) · n(b)    |
//! | `disj`    | n00              | ¬a → b | n(¬a) · n(¬b)   |

use std::fmt;

use thiserror::Error;

use crate::cooccurrence::{CoOccurrenceStudy, PairContingency};

#[derive(Debug, Error, PartialEq)]
pub enum IndexError {
    #[error("pair ({0}, {1}) has no informants")]
    ZeroTotal(String, String),
    #[error("invalid thresholds: {0}")]
    Thresholds(String),
}

/// A margin of the 2×2 table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Margin {
    A,
    NotA,
    B,
    NotB,
}

impl fmt::Display for Margin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Margin::A => "n(a)",
            Margin::NotA => "n(not a)",
            Margin::B => "n(b)",
            Margin::NotB => "n(not b)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HIndex {
    Value(f64),
    /// A margin in the denominator is zero.
    Undefined(Margin),
}

impl HIndex {
    pub fn value(self) -> Option<f64> {
        match self {
            HIndex::Value(v) => Some(v),
            HIndex::Undefined(_) => None,
        }
    }
}

/// Which error cell an index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuadCell {
    Excl,
    Ab,
    Ba,
    Disj,
}

impl QuadCell {
    /// Table layout order: n11, n10, n01, n00.
    pub const ALL: [QuadCell; 4] = [QuadCell::Excl, QuadCell::Ab, QuadCell::Ba, QuadCell::Disj];

    pub fn name(self) -> &'static str {
        match self {
            QuadCell::Excl => "h_excl",
            QuadCell::Ab => "h_ab",
            QuadCell::Ba => "h_ba",
            QuadCell::Disj => "h_disj",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HQuad {
    pub excl: HIndex,
    pub ab: HIndex,
    pub ba: HIndex,
    pub disj: HIndex,
}

impl HQuad {
    pub fn get(&self, cell: QuadCell) -> HIndex {
        match cell {
            QuadCell::Excl => self.excl,
            QuadCell::Ab => self.ab,
            QuadCell::Ba => self.ba,
            QuadCell::Disj => self.disj,
        }
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        QuadCell::ALL.into_iter().filter_map(|c| self.get(c).value())
    }
}

/// `1 - count * total / (m1 * m2)`, exact zero when the cell equals its
/// expectation.
fn loevinger(count: u64, total: u64, (m1, l1): (u64, Margin), (m2, l2): (u64, Margin)) -> HIndex {
    if m1 == 0 {
        return HIndex::Undefined(l1);
    }
    if m2 == 0 {
        return HIndex::Undefined(l2);
    }
    let observed = count as u128 * total as u128;
    let expected = m1 as u128 * m2 as u128;
    if observed == expected {
        return HIndex::Value(0.0);
    }
    HIndex::Value(1.0 - observed as f64 / expected as f64)
}

pub fn loevinger_quad(p: &PairContingency) -> Result<HQuad, IndexError> {
    let n = p.n_total();
    if n == 0 {
        return Err(IndexError::ZeroTotal(p.a.clone(), p.b.clone()));
    }
    let a = (p.margin_a(), Margin::A);
    let not_a = (p.margin_not_a(), Margin::NotA);
    let b = (p.margin_b(), Margin::B);
    let not_b = (p.margin_not_b(), Margin::NotB);
    Ok(HQuad {
        excl: loevinger(p.n11, n, a, b),
        ab: loevinger(p.n10, n, a, not_b),
        ba: loevinger(p.n01, n, b, not_a),
        disj: loevinger(p.n00, n, not_a, not_b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub h_tend: f64,
    pub h_quasi: f64,
    /// Minimum directed index for an edge to enter the graph.
    pub edge_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { h_tend: 0.40, h_quasi: 0.60, edge_min: 0.20 }
    }
}

impl Thresholds {
    /// Requires `0 <= h_tend <= h_quasi <= 1` and `0 <= edge_min <= 1`.
    pub fn validate(&self) -> Result<(), IndexError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.h_tend) && unit(self.h_quasi) && unit(self.edge_min)) {
            return Err(IndexError::Thresholds(format!("{self} must lie in [0, 1]")));
        }
        if self.h_tend > self.h_quasi {
            return Err(IndexError::Thresholds(format!("{self}: h_tend exceeds h_quasi")));
        }
        Ok(())
    }
}

impl fmt::Display for Thresholds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h_tend={} h_quasi={} edge_min={}", self.h_tend, self.h_quasi, self.edge_min)
    }
}

/// Band of a directed index. Ordered by strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    Absence,
    Tendency,
    QImplication,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Absence, Band::Tendency, Band::QImplication];

    pub fn name(self) -> &'static str {
        match self {
            Band::Absence => "absence",
            Band::Tendency => "tendency",
            Band::QImplication => "q-implication",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Lower band edges are inclusive.
pub fn classify(h: f64, t: &Thresholds) -> Band {
    if h >= t.h_quasi {
        Band::QImplication
    } else if h >= t.h_tend {
        Band::Tendency
    } else {
        Band::Absence
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AToB,
    BToA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRelation {
    QEquivalence,
    TendencyEquivalence,
    QExclusion,
    TendencyExclusion,
    /// The stronger directed index, with the other direction's band.
    Directional {
        dominant: Direction,
        band: Band,
        reverse: Option<Band>,
    },
    /// No directed index is defined.
    Undetermined,
}

impl fmt::Display for PairRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairRelation::QEquivalence => f.write_str("q-equivalence"),
            PairRelation::TendencyEquivalence => f.write_str("tendency to equivalence"),
            PairRelation::QExclusion => f.write_str("q-exclusion"),
            PairRelation::TendencyExclusion => f.write_str("tendency to exclusion"),
            PairRelation::Directional { dominant, band, reverse } => {
                let arrow = match dominant {
                    Direction::AToB => "a->b",
                    Direction::BToA => "b->a",
                };
                write!(f, "{band} {arrow}")?;
                if let Some(r) = reverse {
                    write!(f, ", reverse {r}")?;
                }
                Ok(())
            }
            PairRelation::Undetermined => f.write_str("undetermined"),
        }
    }
}

pub fn pair_summary(q: &HQuad, t: &Thresholds) -> PairRelation {
    let (ab, ba) = (q.ab.value(), q.ba.value());
    if let (Some(ab), Some(ba)) = (ab, ba) {
        if ab >= t.h_quasi && ba >= t.h_quasi {
            return PairRelation::QEquivalence;
        }
        // a mixed q-implication/tendency pair stays directional
        if classify(ab, t) == Band::Tendency && classify(ba, t) == Band::Tendency {
            return PairRelation::TendencyEquivalence;
        }
    }
    if let Some(excl) = q.excl.value() {
        match classify(excl, t) {
            Band::QImplication => return PairRelation::QExclusion,
            Band::Tendency => return PairRelation::TendencyExclusion,
            Band::Absence => {}
        }
    }
    match (ab, ba) {
        (None, None) => PairRelation::Undetermined,
        (Some(ab), None) => {
            PairRelation::Directional { dominant: Direction::AToB, band: classify(ab, t), reverse: None }
        }
        (None, Some(ba)) => {
            PairRelation::Directional { dominant: Direction::BToA, band: classify(ba, t), reverse: None }
        }
        (Some(ab), Some(ba)) => {
            let (dominant, strong, weak) = if ab >= ba { (Direction::AToB, ab, ba) } else { (Direction::BToA, ba, ab) };
            PairRelation::Directional { dominant, band: classify(strong, t), reverse: Some(classify(weak, t)) }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphStage {
    Descriptive,
    Inductive,
}

impl GraphStage {
    pub fn name(self) -> &'static str {
        match self {
            GraphStage::Descriptive => "descriptive",
            GraphStage::Inductive => "inductive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicativeEdge {
    pub from: String,
    pub to: String,
    pub h: f64,
    pub band: Band,
    /// Lower credibility limit, set by the Bayesian stage.
    pub limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFact {
    pub a: String,
    pub b: String,
    pub quad: HQuad,
    pub relation: PairRelation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedEdge {
    pub from: String,
    pub to: String,
    pub reason: String,
    /// Lower credibility limit, when one was computed before dropping.
    pub limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicativeGraph {
    pub stage: GraphStage,
    pub nodes: Vec<String>,
    /// Sorted by (from, to) position in `nodes`.
    pub edges: Vec<ImplicativeEdge>,
    /// One entry per pair, in study order; carries the exclusion and
    /// disjunction indices that never become directed edges.
    pub pair_facts: Vec<PairFact>,
    pub skipped: Vec<SkippedEdge>,
    pub thresholds: Thresholds,
}

impl ImplicativeGraph {
    pub fn edge(&self, from: &str, to: &str) -> Option<&ImplicativeEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn fact(&self, a: &str, b: &str) -> Option<&PairFact> {
        self.pair_facts.iter().find(|f| (f.a == a && f.b == b) || (f.a == b && f.b == a))
    }

    pub(crate) fn sort_edges(&mut self) {
        let pos = |label: &str| self.nodes.iter().position(|n| n == label).unwrap_or(usize::MAX);
        let mut keyed: Vec<_> = self.edges.drain(..).map(|e| ((pos(&e.from), pos(&e.to)), e)).collect();
        keyed.sort_by_key(|(k, _)| *k);
        self.edges = keyed.into_iter().map(|(_, e)| e).collect();
    }
}

/// One edge per ordered pair whose directed index reaches `edge_min`.
pub fn descriptive_graph(study: &CoOccurrenceStudy, t: &Thresholds) -> Result<ImplicativeGraph, IndexError> {
    t.validate()?;
    let mut graph = ImplicativeGraph {
        stage: GraphStage::Descriptive,
        nodes: study.attributes().to_vec(),
        edges: Vec::new(),
        pair_facts: Vec::new(),
        skipped: Vec::new(),
        thresholds: *t,
    };
    for pair in study.pairs() {
        let quad = loevinger_quad(pair)?;
        for (from, to, index) in [(&pair.a, &pair.b, quad.ab), (&pair.b, &pair.a, quad.ba)] {
            match index {
                HIndex::Value(h) if h >= t.edge_min => graph.edges.push(ImplicativeEdge {
                    from: from.clone(),
                    to: to.clone(),
                    h,
                    band: classify(h, t),
                    limit: None,
                }),
                HIndex::Value(_) => {}
                HIndex::Undefined(margin) => graph.skipped.push(SkippedEdge {
                    from: from.clone(),
                    to: to.clone(),
                    reason: format!("index undefined: {margin} is zero"),
                    limit: None,
                }),
            }
        }
        graph.pair_facts.push(PairFact {
            a: pair.a.clone(),
            b: pair.b.clone(),
            quad,
            relation: pair_summary(&quad, t),
        });
    }
    graph.sort_edges();
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn quad(cells: [u64; 4]) -> HQuad {
        loevinger_quad(&PairContingency::new("a", "b", cells)).unwrap()
    }

    fn v(i: HIndex) -> f64 {
        i.value().unwrap()
    }

    #[test]
    fn number_sign_quad() {
        let q = quad([100, 30, 85, 553]);
        assert!((v(q.ab) - 0.696).abs() < 5e-4);
        assert!((v(q.ba) - 0.447).abs() < 5e-4);
        assert!((v(q.excl) + 2.193).abs() < 5e-4);
        assert!((v(q.disj) + 0.142).abs() < 5e-4);
    }

    #[test]
    fn sign_letters_quad() {
        let q = quad([150, 35, 43, 540]);
        assert!((v(q.ab) - 0.747).abs() < 5e-4);
        assert!((v(q.ba) - 0.707).abs() < 5e-4);
    }

    #[test]
    fn independence_is_zero() {
        let q = quad([10, 10, 10, 10]);
        assert!(q.defined().all(|h| h == 0.0));
    }

    #[test]
    fn no_counter_examples_is_one() {
        assert_eq!(v(quad([10, 0, 5, 25]).ab), 1.0);
    }

    #[test]
    fn zero_margin_is_undefined() {
        let q = quad([0, 0, 5, 5]);
        assert_eq!(q.ab, HIndex::Undefined(Margin::A));
        assert_eq!(q.excl, HIndex::Undefined(Margin::A));
        assert!(q.disj.value().is_some());
    }

    #[test]
    fn zero_total_is_error() {
        assert!(loevinger_quad(&PairContingency::new("a", "b", [0; 4])).is_err());
    }

    #[test]
    fn band_examples() {
        let t = Thresholds::default();
        assert_eq!(classify(0.696, &t), Band::QImplication);
        assert_eq!(classify(0.447, &t), Band::Tendency);
        assert_eq!(classify(0.18, &t), Band::Absence);
        assert_eq!(classify(0.40, &t), Band::Tendency);
        assert_eq!(classify(0.60, &t), Band::QImplication);
    }

    #[test]
    fn pair_summaries() {
        let t = Thresholds::default();
        assert_eq!(pair_summary(&quad([150, 35, 43, 540]), &t), PairRelation::QEquivalence);
        assert_eq!(
            pair_summary(&quad([100, 30, 85, 553]), &t),
            PairRelation::Directional {
                dominant: Direction::AToB,
                band: Band::QImplication,
                reverse: Some(Band::Tendency)
            }
        );
        let q = HQuad {
            excl: HIndex::Value(0.65),
            ab: HIndex::Value(-0.2),
            ba: HIndex::Value(-0.3),
            disj: HIndex::Value(0.0),
        };
        assert_eq!(pair_summary(&q, &t), PairRelation::QExclusion);
        let q = HQuad { excl: HIndex::Value(0.45), ..q };
        assert_eq!(pair_summary(&q, &t), PairRelation::TendencyExclusion);
        let q = HQuad { ab: HIndex::Value(0.5), ba: HIndex::Value(0.45), excl: HIndex::Value(-1.0), ..q };
        assert_eq!(pair_summary(&q, &t), PairRelation::TendencyEquivalence);
    }

    #[test]
    fn bundled_descriptive_graph() {
        let g = descriptive_graph(&fixtures::bundled_study(), &Thresholds::default()).unwrap();
        let e = g.edge("The number", "The Sign").unwrap();
        assert!((e.h - 0.696).abs() < 5e-4);
        assert_eq!(e.band, Band::QImplication);
        assert!(g.edge("The Sign", "The letters").is_some());
        assert!(g.edge("The letters", "The numbers").is_none());
        assert_eq!(g.pair_facts.len(), 15);
        assert!(g.edges.iter().all(|e| e.h >= 0.2 && e.limit.is_none()));
        assert!(g.skipped.is_empty());
    }

    #[test]
    fn independent_study_has_no_edges() {
        let study = crate::cooccurrence::parse_pair_tables("a,b,2,4,6,12\na,c,3,3,9,9\nb,c,4,4,8,8\n").unwrap();
        assert!(crate::cooccurrence::validate_study(&study).is_empty());
        let g = descriptive_graph(&study, &Thresholds::default()).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn thresholds_validated() {
        assert!(Thresholds { h_tend: 0.7, h_quasi: 0.6, edge_min: 0.2 }.validate().is_err());
        assert!(Thresholds { h_tend: 0.4, h_quasi: 1.2, edge_min: 0.2 }.validate().is_err());
        assert!(Thresholds { edge_min: 0.8, ..Thresholds::default() }.validate().is_ok());
    }
}
