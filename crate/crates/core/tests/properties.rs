use std::collections::{BTreeSet, HashSet};

use fixedbitset::FixedBitSet;
use implinet::bayes::{credibility_lower_limit, inductive_graph, PosteriorConfig};
use implinet::context::{binarize, normalize_term, parse_context_csv, FormalContext, SymbolicTable};
use implinet::cooccurrence::{
    from_usage_records, parse_pair_tables, validate_study, CoOccurrenceStudy, PairContingency, UsageRecord,
};
use implinet::emit::{to_dot, RenderStyle};
use implinet::implicative::{classify, descriptive_graph, loevinger_quad, QuadCell, Thresholds};
use implinet::lattice::{attribute_implication_net, concepts, extent_bits, intent_bits, lattice_order, Concept};
use proptest::prelude::*;

fn context_strategy(max_objects: usize, max_attributes: usize) -> impl Strategy<Value = FormalContext> {
    (1..=max_objects, 1..=max_attributes).prop_flat_map(|(g, m)| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), m), g).prop_map(move |rows| {
            let objects = (0..g).map(|i| format!("o{i}")).collect();
            let attributes = (0..m).map(|j| format!("a{j}")).collect();
            FormalContext::new(objects, attributes, &rows)
        })
    })
}

fn bits(len: usize, mask: u32) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(len);
    for i in 0..len {
        if mask >> i & 1 == 1 {
            b.insert(i);
        }
    }
    b
}

fn is_subset(a: &FixedBitSet, b: &FixedBitSet) -> bool {
    a.is_subset(b)
}

/// Every closed pair, by closing each object subset.
fn brute_force_concepts(ctx: &FormalContext) -> HashSet<Concept> {
    let g = ctx.objects().len();
    let mut out = HashSet::new();
    for mask in 0..(1u32 << g) {
        let intent = intent_bits(ctx, &bits(g, mask));
        let extent = extent_bits(ctx, &intent);
        out.insert(Concept {
            extent: extent.ones().map(|i| ctx.objects()[i].clone()).collect(),
            intent: intent.ones().map(|i| ctx.attributes()[i].clone()).collect(),
        });
    }
    out
}

fn usage_strategy(
    max_informants: usize,
    max_attributes: usize,
) -> impl Strategy<Value = (Vec<UsageRecord>, Vec<String>)> {
    (1..=max_informants, 2..=max_attributes).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), m), n).prop_map(move |rows| {
            let attributes: Vec<String> = (0..m).map(|j| format!("t{j}")).collect();
            let records = rows
                .iter()
                .enumerate()
                .map(|(i, used)| UsageRecord {
                    informant: format!("i{i}"),
                    terms: used.iter().enumerate().filter(|(_, u)| **u).map(|(j, _)| attributes[j].clone()).collect(),
                })
                .collect();
            (records, attributes)
        })
    })
}

fn study_strategy(max_informants: usize, max_attributes: usize) -> impl Strategy<Value = CoOccurrenceStudy> {
    usage_strategy(max_informants, max_attributes)
        .prop_map(|(records, attributes)| from_usage_records(&records, &attributes).unwrap())
}

fn cells_strategy(max: u64) -> impl Strategy<Value = [u64; 4]> {
    prop::array::uniform4(0..=max).prop_filter("nonzero total", |c| c.iter().sum::<u64>() > 0)
}

fn edge_set(g: &implinet::ImplicativeGraph) -> BTreeSet<(String, String)> {
    g.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect()
}

fn small_cfg(seed: u64, delta: f64) -> PosteriorConfig {
    PosteriorConfig { samples: 4000, delta, ..PosteriorConfig::with_seed(seed) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn galois_connection_is_antitone(ctx in context_strategy(8, 8), a in any::<u32>(), b in any::<u32>()) {
        let m = ctx.attributes().len();
        let g = ctx.objects().len();
        let small = bits(m, a & b);
        let large = bits(m, a);
        prop_assert!(is_subset(&extent_bits(&ctx, &large), &extent_bits(&ctx, &small)));
        let small = bits(g, a & b);
        let large = bits(g, a);
        prop_assert!(is_subset(&intent_bits(&ctx, &large), &intent_bits(&ctx, &small)));
    }

    #[test]
    fn extent_intent_extent_is_extent(ctx in context_strategy(8, 8), x in any::<u32>()) {
        let attrs = bits(ctx.attributes().len(), x);
        let ext = extent_bits(&ctx, &attrs);
        prop_assert_eq!(extent_bits(&ctx, &intent_bits(&ctx, &ext)), ext);
        let objs = bits(ctx.objects().len(), x);
        let int = intent_bits(&ctx, &objs);
        prop_assert_eq!(intent_bits(&ctx, &extent_bits(&ctx, &int)), int);
        prop_assert!(is_subset(&objs, &extent_bits(&ctx, &intent_bits(&ctx, &objs))));
    }

    #[test]
    fn concepts_match_brute_force(ctx in context_strategy(10, 10)) {
        let found = concepts(&ctx);
        let set: HashSet<Concept> = found.iter().cloned().collect();
        prop_assert_eq!(set.len(), found.len());
        prop_assert_eq!(set, brute_force_concepts(&ctx));
        for w in found.windows(2) {
            prop_assert!(w[0].extent.len() >= w[1].extent.len());
        }
    }

    #[test]
    fn cover_edges_are_the_transitive_reduction(ctx in context_strategy(7, 7)) {
        let cs = concepts(&ctx);
        let lattice = lattice_order(&cs).unwrap();
        let ext: Vec<HashSet<&String>> = cs.iter().map(|c| c.extent.iter().collect()).collect();
        let below = |i: usize, j: usize| i != j && ext[i].is_subset(&ext[j]);
        let mut expected = BTreeSet::new();
        for l in 0..cs.len() {
            for u in 0..cs.len() {
                if below(l, u) && !(0..cs.len()).any(|m| below(l, m) && below(m, u)) {
                    expected.insert((l, u));
                }
            }
        }
        let got: BTreeSet<_> = lattice.cover_edges.iter().copied().collect();
        prop_assert_eq!(got.len(), lattice.cover_edges.len());
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn mutual_full_force_iff_equal_extents(ctx in context_strategy(8, 6)) {
        let net = attribute_implication_net(&ctx, 0.0).unwrap();
        let force = |a: &str, b: &str| net.edges.iter().find(|e| e.from == a && e.to == b).map(|e| e.force);
        let m = ctx.attributes().len();
        for i in 0..m {
            for j in 0..m {
                if i == j || ctx.attribute_column(i).count_ones(..) == 0 || ctx.attribute_column(j).count_ones(..) == 0 {
                    continue;
                }
                let (a, b) = (&ctx.attributes()[i], &ctx.attributes()[j]);
                let mutual = force(a, b) == Some(1.0) && force(b, a) == Some(1.0);
                prop_assert_eq!(mutual, ctx.attribute_column(i) == ctx.attribute_column(j));
            }
        }
    }
}

fn symbolic_strategy() -> impl Strategy<Value = SymbolicTable> {
    const VOCAB: [&str; 10] =
        ["Sign", "sign ", " SIGN", "word", "Word", "letters", "The letters", "key", "Number", "numbers"];
    (1..=10usize, 1..=10usize).prop_flat_map(|(g, k)| {
        prop::collection::vec(prop::collection::vec(prop::sample::select(&VOCAB[..]), k), g).prop_map(move |rows| {
            let objects = (0..g).map(|i| format!("obj{i}")).collect();
            let informants = (0..k).map(|j| format!("inf{j}")).collect();
            let cells = rows.into_iter().flatten().map(str::to_owned).collect();
            SymbolicTable::new(objects, informants, cells).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn binarized_rows_are_the_normalized_terms(table in symbolic_strategy()) {
        let ctx = binarize(&table);
        for o in 0..table.objects().len() {
            let expected: HashSet<String> = table.row(o).iter().map(|t| normalize_term(t)).collect();
            let got: HashSet<String> = ctx.object_row(o).ones().map(|a| normalize_term(&ctx.attributes()[a])).collect();
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn context_csv_round_trips(table in symbolic_strategy()) {
        let ctx = binarize(&table);
        let back = parse_context_csv(&ctx.to_csv()).unwrap();
        prop_assert_eq!(back.matrix(), ctx.matrix());
        prop_assert_eq!(back, ctx);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn usage_records_always_validate((records, attributes) in usage_strategy(1000, 10)) {
        let study = from_usage_records(&records, &attributes).unwrap();
        let report = validate_study(&study);
        prop_assert!(report.is_empty(), "{}", report);
        prop_assert_eq!(study.n_total(), records.len() as u64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn marginals_agree_across_pairs(study in study_strategy(60, 8)) {
        for attr in study.attributes() {
            let margins: HashSet<u64> = study
                .pairs()
                .iter()
                .filter_map(|p| {
                    if &p.a == attr { Some(p.margin_a()) } else if &p.b == attr { Some(p.margin_b()) } else { None }
                })
                .collect();
            prop_assert_eq!(margins.len(), 1);
        }
    }

    #[test]
    fn pair_csv_round_trips(study in study_strategy(60, 8)) {
        prop_assert_eq!(parse_pair_tables(&study.to_csv()).unwrap(), study);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn indices_are_scale_invariant(cells in cells_strategy(400), k in 1u64..=1000) {
        let p = PairContingency::new("a", "b", cells);
        let base = loevinger_quad(&p).unwrap();
        let scaled = loevinger_quad(&p.scaled(k)).unwrap();
        for cell in QuadCell::ALL {
            match (base.get(cell).value(), scaled.get(cell).value()) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12, "{}: {x} vs {y}", cell.name()),
                (None, None) => {}
                other => prop_assert!(false, "definedness changed: {other:?}"),
            }
        }
    }

    #[test]
    fn quad_straddles_zero(cells in prop::array::uniform4(1u64..=400)) {
        let q = loevinger_quad(&PairContingency::new("a", "b", cells)).unwrap();
        let values: Vec<f64> = q.defined().collect();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(max >= 0.0 && min <= 0.0, "{values:?}");
    }

    #[test]
    fn independence_cells_give_exact_zero(r in prop::array::uniform2(1u64..=60), c in prop::array::uniform2(1u64..=60)) {
        let p = PairContingency::new("a", "b", [r[0] * c[0], r[0] * c[1], r[1] * c[0], r[1] * c[1]]);
        prop_assert_eq!(p.n10 * p.n_total(), p.margin_a() * p.margin_not_b());
        let q = loevinger_quad(&p).unwrap();
        for cell in QuadCell::ALL {
            prop_assert_eq!(q.get(cell).value(), Some(0.0));
        }
    }

    #[test]
    fn band_is_monotone(x in -3.0f64..1.0, y in -3.0f64..1.0) {
        let t = Thresholds::default();
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(classify(lo, &t) <= classify(hi, &t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn edge_set_shrinks_with_edge_min(study in study_strategy(80, 6), e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let at = |edge_min| descriptive_graph(&study, &Thresholds { edge_min, ..Thresholds::default() }).unwrap();
        prop_assert!(edge_set(&at(hi)).is_subset(&edge_set(&at(lo))));
    }

    #[test]
    fn dot_lists_every_edge_once(study in study_strategy(80, 7), seed in any::<u64>()) {
        let t = Thresholds { edge_min: 0.0, ..Thresholds::default() };
        let g = descriptive_graph(&study, &t).unwrap();
        prop_assert!(g.edges.len() <= 50);
        let before = g.clone();
        let style = RenderStyle { merge_equivalences: seed % 2 == 0, ..RenderStyle::default() };
        let dot = to_dot(&g, &style);
        prop_assert_eq!(&before, &g);
        let mut seen = Vec::new();
        for line in dot.lines().filter(|l| l.contains("->")) {
            let names: Vec<&str> = line.split('"').collect();
            let (from, to) = (names[1].to_owned(), names[3].to_owned());
            if line.contains("dir=both") {
                seen.push((to.clone(), from.clone()));
            }
            seen.push((from, to));
        }
        let unique: BTreeSet<_> = seen.iter().cloned().collect();
        prop_assert_eq!(unique.len(), seen.len());
        prop_assert_eq!(unique, edge_set(&g));
    }
}

/// Random tables whose directed index is non-negative.
fn nonnegative_pair() -> impl Strategy<Value = PairContingency> {
    prop::array::uniform4(1u64..=200)
        .prop_map(|c| PairContingency::new("a", "b", c))
        .prop_filter("h >= 0", |p| loevinger_quad(p).unwrap().ab.value().is_some_and(|h| h >= 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn lower_limit_does_not_exceed_point_index(p in nonnegative_pair(), delta in 0.5f64..0.99, seed in any::<u64>()) {
        let r = credibility_lower_limit(&p, &small_cfg(seed, delta)).unwrap();
        let h = r.h_point.unwrap();
        prop_assert!(r.eta_lower <= h + 0.01, "limit {} vs h {h}", r.eta_lower);
        prop_assert!(r.eta_lower <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn limit_approaches_point_index_with_scale(p in nonnegative_pair(), seed in any::<u64>()) {
        let cfg = small_cfg(seed, 0.90);
        let h = loevinger_quad(&p).unwrap().ab.value().unwrap();
        let gap = |k| (h - credibility_lower_limit(&p.scaled(k), &cfg).unwrap().eta_lower).abs();
        let (g1, g10, g100) = (gap(1), gap(10), gap(100));
        prop_assert!(g10 <= g1 + 0.005, "{g1} {g10}");
        prop_assert!(g100 <= g10 + 0.005, "{g10} {g100}");
    }

    #[test]
    fn lower_limit_is_deterministic(cells in prop::array::uniform4(1u64..=200), seed in any::<u64>()) {
        let p = PairContingency::new("a", "b", cells);
        let cfg = small_cfg(seed, 0.9);
        let a = credibility_lower_limit(&p, &cfg).unwrap();
        let b = credibility_lower_limit(&p, &cfg).unwrap();
        prop_assert_eq!(a.eta_lower.to_bits(), b.eta_lower.to_bits());
    }

    #[test]
    fn filtering_is_monotone(
        study in study_strategy(60, 5),
        d in prop::array::uniform2(0.5f64..0.99),
        e in prop::array::uniform2(0.0f64..0.8),
        seed in any::<u64>(),
    ) {
        let (d_lo, d_hi) = if d[0] <= d[1] { (d[0], d[1]) } else { (d[1], d[0]) };
        let (e_lo, e_hi) = if e[0] <= e[1] { (e[0], e[1]) } else { (e[1], e[0]) };
        let run = |delta, edge_min| {
            let t = Thresholds { edge_min, ..Thresholds::default() };
            let g = descriptive_graph(&study, &t).unwrap();
            let out = inductive_graph(&g, &study, &t, &small_cfg(seed, delta)).unwrap();
            prop_assert!(edge_set(&out).is_subset(&edge_set(&g)));
            Ok(edge_set(&out))
        };
        let base = run(d_lo, e_lo)?;
        prop_assert!(run(d_hi, e_lo)?.is_subset(&base));
        prop_assert!(run(d_lo, e_hi)?.is_subset(&base));
    }
}
