mod common;

use std::collections::BTreeMap;

use common::*;
use tangle_sim::metrics::exit::ranked;
use tangle_sim::metrics::{confidence_level, exit_frequencies};
use tangle_sim::rng::{stream, Stream};
use tangle_sim::selector::{select_pair, select_urts, select_walk, transition_probabilities, walk_step};
use tangle_sim::{run_simulation, SelectorKind, SimConfig, TangleState, TxId};

fn walk_frequencies(state: &TangleState, alpha: f64, draws: usize, seed: u64) -> BTreeMap<TxId, f64> {
    let mut rng = stream(seed, Stream::Estimation);
    let mut counts: BTreeMap<TxId, usize> = BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(select_walk(state, alpha, &mut rng).unwrap()).or_default() += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / draws as f64)).collect()
}

#[test]
fn diamond_weights_match_cone_enumeration() {
    let s = diamond();
    let oracle = ancestor_count_weights(&s);
    assert_eq!(oracle, vec![4, 2, 2, 1]);
    for id in s.ids() {
        assert_eq!(s.weight(id), oracle[id.index()]);
        assert_eq!(s.cumulative_weight_oracle(id).unwrap(), oracle[id.index()]);
    }
}

#[test]
fn weights_match_oracle_on_random_tangle() {
    for (selector, seed) in [(SelectorKind::Walk { alpha: 0.05 }, 1), (SelectorKind::Walk { alpha: 0.5 }, 2)] {
        let cfg = SimConfig::new(20.0, selector).with_max_transactions(200).with_seed(seed);
        let s = run_simulation(&cfg, &mut []).unwrap().state;
        assert_eq!(s.len(), 201);
        let oracle = ancestor_count_weights(&s);
        let reach = transitive_closure(&s);
        for x in s.ids() {
            assert_eq!(s.weight(x), oracle[x.index()], "tx {x}");
            assert_eq!(s.cumulative_weight_oracle(x).unwrap(), oracle[x.index()], "tx {x}");
            let by_closure = s.ids().filter(|y| s.is_revealed(*y) && reach[y.index()][x.index()]).count() as u64;
            assert_eq!(by_closure.max(1), oracle[x.index()], "tx {x}");
        }
    }
}

#[test]
fn indirect_approval_matches_transitive_closure() {
    let cfg = SimConfig::new(10.0, SelectorKind::Urts).with_max_transactions(100).with_seed(5);
    let s = run_simulation(&cfg, &mut []).unwrap().state;
    let reach = transitive_closure(&s);
    for y in s.ids() {
        for x in s.ids() {
            assert_eq!(s.indirectly_approves(y, x).unwrap(), reach[y.index()][x.index()], "({y}, {x})");
        }
    }
}

#[test]
fn unbiased_walk_matches_path_enumeration() {
    let s = fixed_dag(false);
    let oracle = path_enumeration_exit(&s, 0.0);
    assert_eq!(oracle.keys().copied().collect::<Vec<_>>(), [6, 7, 8].map(TxId::new));
    assert!((oracle.values().sum::<f64>() - 1.0).abs() < 1e-12);
    let freq = walk_frequencies(&s, 0.0, 1_000_000, 17);
    for (tip, p) in &oracle {
        let f = freq.get(tip).copied().unwrap_or(0.0);
        assert!((f - p).abs() < 1e-2, "tip {tip}: {f} vs {p}");
    }
}

#[test]
fn biased_walk_matches_path_enumeration() {
    let mut s = fixed_dag(true);
    s.recompute_weights();
    for alpha in [0.3, 1.0] {
        let oracle = path_enumeration_exit(&s, alpha);
        let freq = walk_frequencies(&s, alpha, 400_000, 23);
        for (tip, p) in &oracle {
            let f = freq.get(tip).copied().unwrap_or(0.0);
            assert!((f - p).abs() < 1e-2, "alpha {alpha} tip {tip}: {f} vs {p}");
        }
    }
}

#[test]
fn exit_frequencies_and_ranked_profile_match_oracle() {
    let s = fixed_dag(false);
    let oracle = path_enumeration_exit(&s, 0.0);
    let freqs = exit_frequencies(&s, SelectorKind::Walk { alpha: 0.0 }, 1_000_000, 3).unwrap();
    let mut expected: Vec<f64> = oracle.values().copied().collect();
    expected.sort_by(|a, b| b.total_cmp(a));
    for (r, e) in ranked(&freqs).iter().zip(&expected) {
        assert!((r - e).abs() < 1e-2, "{r} vs {e}");
    }
}

#[test]
fn two_approvers_with_weights_ten_and_five() {
    // genesis <- a, b; a carries 8 more approvers in a chain, b carries 3
    let mut s = TangleState::new(true);
    let a = s.add_transaction([TxId::GENESIS; 2], 0.0).unwrap();
    let b = s.add_transaction([TxId::GENESIS; 2], 0.0).unwrap();
    s.drain();
    let (mut pa, mut pb) = (a, b);
    let mut t = 1.0;
    for i in 0..9 {
        pa = s.add_transaction([pa; 2], t).unwrap();
        if i < 4 {
            pb = s.add_transaction([pb; 2], t).unwrap();
        }
        t += 1.0;
        s.reveal_due(t);
    }
    assert_eq!((s.weight(a), s.weight(b)), (10, 5));
    let expected = 1f64.exp() / (1f64.exp() + 0.5f64.exp());
    assert!((expected - 0.6225).abs() < 1e-4);

    let probs = transition_probabilities(&s, TxId::GENESIS, 0.1).unwrap();
    let p_a = probs.iter().find(|p| p.0 == a).unwrap().1;
    assert!((p_a - expected).abs() < 1e-12);

    let n = 1_000_000;
    let mut rng = stream(9, Stream::Estimation);
    let hits = (0..n).filter(|_| walk_step(&s, TxId::GENESIS, 0.1, &mut rng).unwrap() == a).count();
    let f = hits as f64 / n as f64;
    assert!((f - expected).abs() < three_sigma(expected, n), "{f}");
}

#[test]
fn equal_weights_split_evenly() {
    let s = diamond();
    for alpha in [0.0, 0.7, 50.0] {
        let probs = transition_probabilities(&s, TxId::GENESIS, alpha).unwrap();
        assert_eq!(probs.len(), 2);
        assert!(probs.iter().all(|p| (p.1 - 0.5).abs() < 1e-12));
    }
}

#[test]
fn urts_is_uniform_over_four_tips() {
    let mut s = TangleState::new(false);
    for i in 0..4 {
        s.add_transaction([TxId::GENESIS; 2], 0.1 * i as f64).unwrap();
    }
    s.drain();
    assert_eq!(s.tip_count(), 4);
    let n = 1_000_000;
    let mut rng = stream(4, Stream::TipSelection);
    let mut counts = [0usize; 5];
    for _ in 0..n {
        counts[select_urts(&s, &mut rng).unwrap().index()] += 1;
    }
    for c in &counts[1..] {
        let f = *c as f64 / n as f64;
        assert!((f - 0.25).abs() < three_sigma(0.25, n), "{f}");
    }
}

#[test]
fn urts_pair_repeats_half_the_time_over_two_tips() {
    let mut two = TangleState::new(false);
    two.add_transaction([TxId::GENESIS; 2], 0.0).unwrap();
    two.add_transaction([TxId::GENESIS; 2], 0.0).unwrap();
    two.drain();
    assert_eq!(two.tip_count(), 2);
    let n = 1_000_000;
    let mut rng = stream(6, Stream::TipSelection);
    let repeats = (0..n)
        .filter(|_| {
            let [a, b] = select_pair(&two, SelectorKind::Urts, &mut rng).unwrap();
            a == b
        })
        .count();
    let f = repeats as f64 / n as f64;
    assert!((f - 0.5).abs() < three_sigma(0.5, n), "{f}");
}

#[test]
fn walk_pairs_are_products_of_single_exits() {
    // diamond without its top: two tips, each reached with probability 1/2
    let s =
        TangleState::from_edge_list("0 0 0 - -\n1 0.1 1.1 0 0\n2 0.2 1.2 0 0\n3 1.5 2.5 1 1\n", false, f64::INFINITY)
            .unwrap();
    let single = path_enumeration_exit(&s, 0.0);
    let n = 400_000;
    let mut rng = stream(12, Stream::TipSelection);
    let mut counts: BTreeMap<(TxId, TxId), usize> = BTreeMap::new();
    for _ in 0..n {
        let [a, b] = select_pair(&s, SelectorKind::Walk { alpha: 0.0 }, &mut rng).unwrap();
        *counts.entry((a, b)).or_default() += 1;
    }
    for (&a, pa) in &single {
        for (&b, pb) in &single {
            let f = counts.get(&(a, b)).copied().unwrap_or(0) as f64 / n as f64;
            assert!((f - pa * pb).abs() < 1e-2, "({a},{b}): {f} vs {}", pa * pb);
        }
    }
}

#[test]
fn large_alpha_follows_the_heaviest_path() {
    let mut s = fixed_dag(true);
    s.recompute_weights();
    // follow the argmax from the genesis by hand
    let approvers = approvers_from_parents(&s);
    let w = ancestor_count_weights(&s);
    let mut x = TxId::GENESIS;
    while !approvers[x.index()].is_empty() {
        let next = &approvers[x.index()];
        let best = next.iter().max_by_key(|z| w[z.index()]).unwrap();
        assert_eq!(next.iter().filter(|z| w[z.index()] == w[best.index()]).count(), 1, "tie at {x}");
        x = *best;
    }
    let freq = walk_frequencies(&s, 1000.0, 100_000, 31);
    assert!(freq.get(&x).copied().unwrap_or(0.0) >= 0.999, "{freq:?}");
}

#[test]
fn chain_walk_is_deterministic() {
    let mut s = TangleState::new(true);
    let mut prev = TxId::GENESIS;
    for i in 0..30 {
        prev = s.add_transaction([prev; 2], i as f64).unwrap();
        s.reveal_due(i as f64 + 1.0);
    }
    let mut rng = stream(1, Stream::TipSelection);
    for alpha in [0.0, 0.2, 100.0] {
        assert_eq!(select_walk(&s, alpha, &mut rng).unwrap(), prev);
    }
}

#[test]
fn confidence_in_diamond_side_matches_oracle() {
    let s = TangleState::from_edge_list(
        "0 0 0 - -\n1 0.1 1.1 0 0\n2 0.2 1.2 0 0\n3 1.5 2.5 1 1\n4 1.6 2.6 2 2\n5 1.7 2.7 1 2\n",
        false,
        f64::INFINITY,
    )
    .unwrap();
    let reach = transitive_closure(&s);
    let exit = path_enumeration_exit(&s, 0.0);
    let x = TxId::new(1);
    let mass: f64 = exit.iter().filter(|(t, _)| reach[t.index()][x.index()]).map(|e| e.1).sum();
    let est = confidence_level(&s, x, SelectorKind::Walk { alpha: 0.0 }, 400_000, 2).unwrap();
    assert!((est - mass).abs() < 1e-2, "{est} vs {mass}");
}

#[test]
fn fresh_tip_confidence_under_urts_is_one_over_l() {
    let cfg = SimConfig::new(20.0, SelectorKind::Urts).with_duration(40.0).with_warmup(0.0).with_seed(8);
    let mut s = run_simulation(&cfg, &mut []).unwrap().state;
    s.drain();
    let l = s.tip_count();
    let x = s.tips()[0];
    let n = 400_000;
    let est = confidence_level(&s, x, SelectorKind::Urts, n, 1).unwrap();
    let p = 1.0 / l as f64;
    assert!((est - p).abs() < three_sigma(p, n), "{est} vs {p}");
}

#[test]
fn issuance_counts_are_poisson() {
    use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};
    let runs = 2000;
    let mean = 100.0;
    let mut counts = BTreeMap::new();
    for r in 0..runs {
        let cfg = SimConfig::new(10.0, SelectorKind::Urts).with_duration(10.0).with_warmup(0.0).with_seed(1000 + r);
        *counts.entry(run_simulation(&cfg, &mut []).unwrap().issued).or_insert(0usize) += 1;
    }
    // bins of width 5 between 75 and 125, open at both ends
    let pois = Poisson::new(mean).unwrap();
    let edges: Vec<u64> = (75..=125).step_by(5).collect();
    let mut observed = vec![0usize; edges.len() + 1];
    for (&k, &c) in &counts {
        let bin = edges.iter().position(|&e| (k as u64) < e).unwrap_or(edges.len());
        observed[bin] += c;
    }
    let mut probs = vec![0.0; edges.len() + 1];
    for k in 0..400u64 {
        let bin = edges.iter().position(|&e| k < e).unwrap_or(edges.len());
        probs[bin] += pois.pmf(k);
    }
    let chi2: f64 = observed
        .iter()
        .zip(&probs)
        .map(|(&o, &p)| {
            let e = p * runs as f64;
            assert!(e >= 5.0);
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new((observed.len() - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}
