//! Galois derivation operators, concept enumeration and the attribute
//! implication net.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::context::FormalContext;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error("duplicate concept with extent {0:?}")]
    DuplicateConcept(Vec<String>),
    #[error("force threshold {0} outside [0, 1]")]
    ForceRange(f64),
}

/// Objects having every attribute in `attrs`.
pub fn extent_bits(ctx: &FormalContext, attrs: &FixedBitSet) -> FixedBitSet {
    let mut objects = FixedBitSet::with_capacity(ctx.objects().len());
    objects.insert_range(..);
    for a in attrs.ones() {
        objects.intersect_with(ctx.attribute_column(a));
    }
    objects
}

/// Attributes shared by every object in `objs`.
pub fn intent_bits(ctx: &FormalContext, objs: &FixedBitSet) -> FixedBitSet {
    let mut attrs = FixedBitSet::with_capacity(ctx.attributes().len());
    attrs.insert_range(..);
    for o in objs.ones() {
        attrs.intersect_with(ctx.object_row(o));
    }
    attrs
}

fn attribute_bits<S: AsRef<str>>(ctx: &FormalContext, attrs: &[S]) -> Result<FixedBitSet, LatticeError> {
    let mut bits = FixedBitSet::with_capacity(ctx.attributes().len());
    for label in attrs {
        let label = label.as_ref();
        let a = ctx.attribute_index(label).ok_or_else(|| LatticeError::UnknownAttribute(label.to_owned()))?;
        bits.insert(a);
    }
    Ok(bits)
}

fn object_bits<S: AsRef<str>>(ctx: &FormalContext, objs: &[S]) -> Result<FixedBitSet, LatticeError> {
    let mut bits = FixedBitSet::with_capacity(ctx.objects().len());
    for label in objs {
        let label = label.as_ref();
        let o = ctx.object_index(label).ok_or_else(|| LatticeError::UnknownObject(label.to_owned()))?;
        bits.insert(o);
    }
    Ok(bits)
}

fn labels(all: &[String], bits: &FixedBitSet) -> Vec<String> {
    bits.ones().map(|i| all[i].clone()).collect()
}

/// Object labels (context order) incident to every attribute in `attrs`.
pub fn extent<S: AsRef<str>>(ctx: &FormalContext, attrs: &[S]) -> Result<Vec<String>, LatticeError> {
    Ok(labels(ctx.objects(), &extent_bits(ctx, &attribute_bits(ctx, attrs)?)))
}

/// Attribute labels (context order) shared by every object in `objs`.
pub fn intent<S: AsRef<str>>(ctx: &FormalContext, objs: &[S]) -> Result<Vec<String>, LatticeError> {
    Ok(labels(ctx.attributes(), &intent_bits(ctx, &object_bits(ctx, objs)?)))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Concept {
    /// Object labels in context order.
    pub extent: Vec<String>,
    /// Attribute labels in context order.
    pub intent: Vec<String>,
}

/// All concepts of `ctx`, enumerated by closing attribute sets in lectic
/// order, then sorted by descending extent size and lexicographic extent
/// (object indices).
pub fn concepts(ctx: &FormalContext) -> Vec<Concept> {
    let m = ctx.attributes().len();
    let close = |attrs: &FixedBitSet| intent_bits(ctx, &extent_bits(ctx, attrs));

    let mut found: Vec<(Vec<usize>, FixedBitSet)> = Vec::new();
    let mut current = close(&FixedBitSet::with_capacity(m));
    loop {
        let ext = extent_bits(ctx, &current);
        found.push((ext.ones().collect(), current.clone()));

        let mut next = None;
        for i in (0..m).rev() {
            if current.contains(i) {
                current.set(i, false);
                continue;
            }
            // `current` now holds only attributes below i.
            let mut candidate = current.clone();
            candidate.insert(i);
            let closed = close(&candidate);
            if closed.ones().take_while(|&j| j < i).eq(current.ones()) {
                next = Some(closed);
                break;
            }
        }
        match next {
            Some(n) => current = n,
            None => break,
        }
    }

    found.sort_by(|(a, _), (b, _)| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    found
        .into_iter()
        .map(|(ext, int)| Concept {
            extent: ext.into_iter().map(|o| ctx.objects()[o].clone()).collect(),
            intent: labels(ctx.attributes(), &int),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptLattice {
    pub concepts: Vec<Concept>,
    /// Cover relation as (lower, upper) indices into `concepts`.
    pub cover_edges: Vec<(usize, usize)>,
}

impl ConceptLattice {
    /// Index of the concept with the largest extent.
    pub fn top(&self) -> Option<usize> {
        (0..self.concepts.len()).max_by_key(|&i| (self.concepts[i].extent.len(), std::cmp::Reverse(i)))
    }

    /// Index of the concept with the smallest extent.
    pub fn bottom(&self) -> Option<usize> {
        (0..self.concepts.len()).min_by_key(|&i| (self.concepts[i].extent.len(), i))
    }

    pub fn upper_covers(&self, lower: usize) -> Vec<usize> {
        self.cover_edges.iter().filter(|(l, _)| *l == lower).map(|&(_, u)| u).collect()
    }

    /// One line per concept: `{extent} | {intent}`.
    pub fn listing(&self) -> String {
        self.concepts.iter().map(|c| format!("{{{}}} | {{{}}}\n", c.extent.join(", "), c.intent.join(", "))).collect()
    }
}

/// Hasse diagram of the extent-inclusion order.
pub fn lattice_order(concepts: &[Concept]) -> Result<ConceptLattice, LatticeError> {
    let extents: Vec<BTreeSet<&str>> = concepts.iter().map(|c| c.extent.iter().map(String::as_str).collect()).collect();
    for i in 0..extents.len() {
        if extents[..i].contains(&extents[i]) {
            return Err(LatticeError::DuplicateConcept(concepts[i].extent.clone()));
        }
    }
    let below = |i: usize, j: usize| extents[i].len() < extents[j].len() && extents[i].is_subset(&extents[j]);
    let n = concepts.len();
    let mut cover_edges = Vec::new();
    for lower in 0..n {
        for upper in 0..n {
            if below(lower, upper) && !(0..n).any(|k| below(lower, k) && below(k, upper)) {
                cover_edges.push((lower, upper));
            }
        }
    }
    Ok(ConceptLattice { concepts: concepts.to_vec(), cover_edges })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetEdge {
    pub from: String,
    pub to: String,
    /// |extent(from) ∩ extent(to)| / |extent(from)|
    pub force: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicationNet {
    pub nodes: Vec<String>,
    pub edges: Vec<NetEdge>,
    /// Attributes with an empty extent; they have no outgoing edges.
    pub skipped: Vec<String>,
}

/// Pairwise implications between attributes whose inclusion degree reaches
/// `force_min`. Use 1.0 for crisp implications only.
pub fn attribute_implication_net(ctx: &FormalContext, force_min: f64) -> Result<ImplicationNet, LatticeError> {
    if !(0.0..=1.0).contains(&force_min) {
        return Err(LatticeError::ForceRange(force_min));
    }
    let attrs = ctx.attributes();
    let mut edges = Vec::new();
    let mut skipped = Vec::new();
    for (a, from) in attrs.iter().enumerate() {
        let ext_a = ctx.attribute_column(a);
        let support = ext_a.count_ones(..);
        if support == 0 {
            skipped.push(from.clone());
            continue;
        }
        for (b, to) in attrs.iter().enumerate() {
            if a == b {
                continue;
            }
            let shared = ext_a.intersection_count(ctx.attribute_column(b));
            let force = if shared == support { 1.0 } else { shared as f64 / support as f64 };
            if force >= force_min {
                edges.push(NetEdge { from: from.clone(), to: to.clone(), force });
            }
        }
    }
    Ok(ImplicationNet { nodes: attrs.to_vec(), edges, skipped })
}
