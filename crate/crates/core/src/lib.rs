//! Galois lattices, attribute-implication nets and Loevinger implicative
//! analysis of term co-occurrence, with Bayesian lower-credibility filtering
//! of the resulting graphs.
//!
//! The pipeline runs in stages:
//!
//! 1. [`context`]: symbolic informant tables are binarized into a formal context.
//! 2. [`lattice`]: concepts, the Hasse diagram and the attribute implication net.
//! 3. [`cooccurrence`]: 2×2 co-occurrence counts per attribute pair.
//! 4. [`implicative`]: Loevinger indices, band classification, descriptive graph.
//! 5. [`bayes`]: posterior lower credibility limits and the inductive graph.
//! 6. [`emit`]: DOT and tabular renderings.
//!
//! [`cli`] drives all of them from the command line.

pub mod bayes;
pub mod cli;
pub mod context;
pub mod cooccurrence;
pub mod emit;
pub mod fixtures;
pub mod implicative;
pub mod lattice;
pub mod validation;

pub use bayes::{credibility_lower_limit, inductive_graph, posterior_eta_samples, CredibilityResult, PosteriorConfig};
pub use context::{binarize, parse_symbolic_table, validate_context, FormalContext, SymbolicTable};
pub use cooccurrence::{from_usage_records, parse_pair_tables, validate_study, CoOccurrenceStudy, PairContingency};
pub use implicative::{
    classify, descriptive_graph, loevinger_quad, pair_summary, Band, HIndex, HQuad, ImplicativeGraph, PairRelation,
    Thresholds,
};
pub use lattice::{attribute_implication_net, concepts, lattice_order, Concept, ConceptLattice, ImplicationNet};
pub use validation::{Finding, Severity, ValidationReport};
