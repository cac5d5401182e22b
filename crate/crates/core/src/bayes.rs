//! Bayesian lower credibility limits for directed implication indices.
//!
//! The four cell probabilities of a pair get a Dirichlet posterior: the
//! observed counts plus a symmetric pseudo-count per cell. Each posterior
//! draw `p` maps to the index
//!
//! ```text
//! eta = 1 - p10 / ((p11 + p10) * (p10 + p00))
//! ```
//!
//! and the lower limit at guarantee `delta` is the `(1 - delta)` order
//! statistic of the draws.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::cooccurrence::{CoOccurrenceStudy, PairContingency};
use crate::implicative::{classify, loevinger_quad, GraphStage, ImplicativeGraph, SkippedEdge, Thresholds};

pub const MIN_SAMPLES: usize = 1000;

/// Largest tolerated share of draws rejected for a zero denominator.
pub const MAX_REJECTION_RATE: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum BayesError {
    #[error("invalid posterior config: {0}")]
    Config(String),
    #[error("pair ({0}, {1}) has no informants")]
    ZeroTotal(String, String),
    #[error("{rejected} of {drawn} posterior draws had a zero denominator")]
    Degenerate { rejected: usize, drawn: usize },
    #[error("edge {0} -> {1} has no pair in the study")]
    MissingPair(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorConfig {
    /// Added to every cell count.
    pub prior_pseudocount: f64,
    /// Posterior mass required above the reported limit.
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
}

impl PosteriorConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { prior_pseudocount: 1.0, delta: 0.90, samples: 100_000, seed }
    }

    pub fn validate(&self) -> Result<(), BayesError> {
        if !(self.prior_pseudocount > 0.0 && self.prior_pseudocount.is_finite()) {
            return Err(BayesError::Config(format!("prior {} must be positive", self.prior_pseudocount)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BayesError::Config(format!("delta {} must lie strictly between 0 and 1", self.delta)));
        }
        if self.samples < MIN_SAMPLES {
            return Err(BayesError::Config(format!("samples {} below minimum {MIN_SAMPLES}", self.samples)));
        }
        Ok(())
    }
}

impl fmt::Display for PosteriorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "prior={} delta={} samples={} seed={}", self.prior_pseudocount, self.delta, self.samples, self.seed)
    }
}

/// Posterior draws of the a → b index for one pair.
///
/// Yields `cfg.samples` attempts minus rejected ones; `rejected()` counts
/// draws whose denominator vanished.
pub struct EtaSamples {
    rng: ChaCha8Rng,
    cells: [Gamma<f64>; 4],
    remaining: usize,
    rejected: usize,
}

impl EtaSamples {
    pub fn rejected(&self) -> usize {
        self.rejected
    }
}

impl Iterator for EtaSamples {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        while self.remaining > 0 {
            self.remaining -= 1;
            let [g11, g10, g01, g00] = [0, 1, 2, 3].map(|i| self.cells[i].sample(&mut self.rng));
            let total = g11 + g10 + g01 + g00;
            let denom = (g11 + g10) * (g10 + g00);
            if denom > 0.0 && denom.is_finite() && total.is_finite() {
                // eta is computed on unnormalized gammas: p = g / total.
                return Some(1.0 - g10 * total / denom);
            }
            self.rejected += 1;
        }
        None
    }
}

pub fn posterior_eta_samples(p: &PairContingency, cfg: &PosteriorConfig) -> Result<EtaSamples, BayesError> {
    cfg.validate()?;
    if p.n_total() == 0 {
        return Err(BayesError::ZeroTotal(p.a.clone(), p.b.clone()));
    }
    let gamma = |n: u64| Gamma::new(n as f64 + cfg.prior_pseudocount, 1.0).expect("positive shape");
    Ok(EtaSamples {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cells: p.cells().map(gamma),
        remaining: cfg.samples,
        rejected: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibilityResult {
    /// Plug-in index from the counts; `None` when a margin is zero.
    pub h_point: Option<f64>,
    pub eta_lower: f64,
    pub samples_used: usize,
}

/// 1-based rank `ceil((1 - delta) * n)` clamped to `1..=n`.
pub fn lower_rank(delta: f64, n: usize) -> usize {
    // slack absorbs representation error in 1 - delta
    let rank = ((1.0 - delta) * n as f64 - 1e-9).ceil();
    (rank.max(1.0) as usize).min(n)
}

/// Lower limit of the a → b index at guarantee `cfg.delta`.
pub fn credibility_lower_limit(p: &PairContingency, cfg: &PosteriorConfig) -> Result<CredibilityResult, BayesError> {
    let mut stream = posterior_eta_samples(p, cfg)?;
    let mut draws: Vec<f64> = stream.by_ref().collect();
    let rejected = stream.rejected();
    if draws.is_empty() || rejected as f64 > MAX_REJECTION_RATE * cfg.samples as f64 {
        return Err(BayesError::Degenerate { rejected, drawn: cfg.samples });
    }
    let k = lower_rank(cfg.delta, draws.len());
    let (_, lower, _) = draws.select_nth_unstable_by(k - 1, f64::total_cmp);
    let h_point = loevinger_quad(p).ok().and_then(|q| q.ab.value());
    Ok(CredibilityResult { h_point, eta_lower: *lower, samples_used: draws.len() })
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the edge `from -> to`: FNV-1a 64 over the UTF-8 bytes of
/// `from`, a 0xFF separator and `to`, xored with the master seed and
/// passed through splitmix64.
pub fn edge_seed(master: u64, from: &str, to: &str) -> u64 {
    let hash = from
        .bytes()
        .chain(std::iter::once(0xff))
        .chain(to.bytes())
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME));
    splitmix64(master ^ hash)
}

/// Limit for the directed edge `from -> to` with its per-edge seed.
pub fn edge_limit(
    study: &CoOccurrenceStudy,
    from: &str,
    to: &str,
    cfg: &PosteriorConfig,
) -> Result<CredibilityResult, BayesError> {
    let pair = study.pair(from, to).ok_or_else(|| BayesError::MissingPair(from.to_owned(), to.to_owned()))?;
    let edge_cfg = PosteriorConfig { seed: edge_seed(cfg.seed, from, to), ..*cfg };
    credibility_lower_limit(&pair, &edge_cfg)
}

/// Keeps the edges of `g` whose lower limit reaches `t.edge_min`.
///
/// Retained edges carry their limit; their band is recomputed from the
/// point index. Dropped edges are listed in `skipped` with the reason.
pub fn inductive_graph(
    g: &ImplicativeGraph,
    study: &CoOccurrenceStudy,
    t: &Thresholds,
    cfg: &PosteriorConfig,
) -> Result<ImplicativeGraph, BayesError> {
    cfg.validate()?;
    let mut out = ImplicativeGraph {
        stage: GraphStage::Inductive,
        nodes: g.nodes.clone(),
        edges: Vec::new(),
        pair_facts: g.pair_facts.clone(),
        skipped: g.skipped.clone(),
        thresholds: *t,
    };
    for edge in &g.edges {
        let drop = |reason: String, limit| SkippedEdge { from: edge.from.clone(), to: edge.to.clone(), reason, limit };
        match edge_limit(study, &edge.from, &edge.to, cfg) {
            Ok(result) => {
                let h = match result.h_point {
                    Some(h) => h,
                    None => {
                        out.skipped.push(drop("index undefined".into(), None));
                        continue;
                    }
                };
                if result.eta_lower >= t.edge_min {
                    let mut kept = edge.clone();
                    kept.h = h;
                    kept.band = classify(h, t);
                    kept.limit = Some(result.eta_lower);
                    out.edges.push(kept);
                } else {
                    out.skipped.push(drop(
                        format!("lower limit {:.3} below edge_min {}", result.eta_lower, t.edge_min),
                        Some(result.eta_lower),
                    ));
                }
            }
            Err(e @ BayesError::Config(_)) => return Err(e),
            Err(e) => out.skipped.push(drop(e.to_string(), None)),
        }
    }
    out.sort_edges();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::implicative::descriptive_graph;

    fn cfg(seed: u64) -> PosteriorConfig {
        PosteriorConfig { samples: 20_000, ..PosteriorConfig::with_seed(seed) }
    }

    fn pair(cells: [u64; 4]) -> PairContingency {
        PairContingency::new("a", "b", cells)
    }

    fn mean(xs: impl Iterator<Item = f64>) -> f64 {
        let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        s / n as f64
    }

    #[test]
    fn config_validation() {
        assert!(PosteriorConfig::with_seed(1).validate().is_ok());
        assert!(PosteriorConfig { samples: 100, ..PosteriorConfig::with_seed(1) }.validate().is_err());
        assert!(PosteriorConfig { delta: 1.0, ..PosteriorConfig::with_seed(1) }.validate().is_err());
        assert!(PosteriorConfig { delta: 0.0, ..PosteriorConfig::with_seed(1) }.validate().is_err());
        assert!(PosteriorConfig { prior_pseudocount: 0.0, ..PosteriorConfig::with_seed(1) }.validate().is_err());
    }

    #[test]
    fn rank_rule() {
        assert_eq!(lower_rank(0.90, 100_000), 10_000);
        assert_eq!(lower_rank(0.95, 1000), 50);
        assert_eq!(lower_rank(0.9999, 1000), 1);
        assert_eq!(lower_rank(0.5, 3), 2);
    }

    #[test]
    fn stream_is_deterministic() {
        let p = pair([100, 30, 85, 553]);
        let a: Vec<f64> = posterior_eta_samples(&p, &cfg(7)).unwrap().collect();
        let b: Vec<f64> = posterior_eta_samples(&p, &cfg(7)).unwrap().collect();
        let c: Vec<f64> = posterior_eta_samples(&p, &cfg(8)).unwrap().collect();
        assert_eq!(a.len(), 20_000);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stream_mean_matches_larger_run() {
        let p = pair([100, 30, 85, 553]);
        let small = mean(posterior_eta_samples(&p, &cfg(11)).unwrap());
        let big_cfg = PosteriorConfig { samples: 200_000, ..cfg(12) };
        let big = mean(posterior_eta_samples(&p, &big_cfg).unwrap());
        assert!((small - big).abs() < 0.02, "{small} vs {big}");
    }

    #[test]
    fn symmetric_counts_center_on_zero() {
        let mut draws: Vec<f64> = posterior_eta_samples(&pair([50, 50, 50, 50]), &cfg(3)).unwrap().collect();
        draws.sort_by(f64::total_cmp);
        let median = draws[draws.len() / 2];
        assert!(median.abs() < 0.02, "{median}");
    }

    #[test]
    fn sign_to_number_limit_near_anchor() {
        // reverse direction of (The number, The Sign)
        let r = credibility_lower_limit(&pair([100, 85, 30, 553]), &PosteriorConfig::with_seed(42)).unwrap();
        assert!((r.eta_lower - 0.397).abs() < 0.08, "{}", r.eta_lower);
        let h = r.h_point.unwrap();
        assert!(h - r.eta_lower > 0.0 && h - r.eta_lower < 0.15);
    }

    #[test]
    fn scaled_counts_concentrate() {
        let p = pair([100, 30, 85, 553]).scaled(100);
        let r = credibility_lower_limit(&p, &cfg(5)).unwrap();
        assert!((r.h_point.unwrap() - 0.696).abs() < 5e-4);
        assert!((r.eta_lower - r.h_point.unwrap()).abs() < 0.02);
    }

    #[test]
    fn higher_guarantee_lowers_limit() {
        let p = pair([100, 30, 85, 553]);
        let at = |delta| credibility_lower_limit(&p, &PosteriorConfig { delta, ..cfg(9) }).unwrap().eta_lower;
        assert!(at(0.95) <= at(0.90));
    }

    #[test]
    fn edge_seeds_differ_by_direction() {
        assert_ne!(edge_seed(1, "a", "b"), edge_seed(1, "b", "a"));
        assert_ne!(edge_seed(1, "ab", ""), edge_seed(1, "a", "b"));
        assert_eq!(edge_seed(9, "x", "y"), edge_seed(9, "x", "y"));
    }

    #[test]
    fn inductive_graph_filters_bundled_study() {
        let study = fixtures::bundled_study();
        let t = Thresholds::default();
        let g = descriptive_graph(&study, &t).unwrap();
        let filtered = inductive_graph(&g, &study, &t, &PosteriorConfig::with_seed(42)).unwrap();
        for e in &filtered.edges {
            assert!(g.edge(&e.from, &e.to).is_some());
            assert!(e.limit.unwrap() >= t.edge_min);
        }
        for (a, b) in [
            ("The Sign", "The letters"),
            ("The letters", "The Sign"),
            ("The number", "The Sign"),
            ("The Sign", "The number"),
        ] {
            assert!(filtered.edge(a, b).is_some(), "{a} -> {b}");
        }
        assert_eq!(filtered.edges.len() + filtered.skipped.len(), g.edges.len());
    }

    #[test]
    fn high_guarantee_drops_small_sample_edges() {
        let study = crate::cooccurrence::parse_pair_tables("a,b,6,1,2,11\n").unwrap();
        let t = Thresholds::default();
        let g = descriptive_graph(&study, &t).unwrap();
        let kept = |delta| inductive_graph(&g, &study, &t, &PosteriorConfig { delta, ..cfg(1) }).unwrap().edges.len();
        assert!(kept(0.999) < kept(0.90), "{} vs {}", kept(0.999), kept(0.90));
    }
}
