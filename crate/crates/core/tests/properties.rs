mod common;

use common::*;
use proptest::prelude::*;
use tangle_sim::metrics::confidence_level;
use tangle_sim::rng::{stream, Stream};
use tangle_sim::selector::{select_pair, softmax, walk_step};
use tangle_sim::{run_simulation, Observer, SelectorKind, SimConfig, TangleState, TxId};

/// One step of a hand-driven Tangle: issue a transaction whose parents are
/// picked among revealed transactions, or advance time.
#[derive(Debug, Clone)]
enum Op {
    Issue(u16, u16),
    Advance(f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (any::<u16>(), any::<u16>()).prop_map(|(a, b)| Op::Issue(a, b)),
        1 => (0.05f64..1.5).prop_map(Op::Advance),
    ]
}

fn total_weight(s: &TangleState) -> u64 {
    s.ids().filter(|&x| s.is_revealed(x)).map(|x| s.weight(x)).sum()
}

fn ancestors(s: &TangleState, y: TxId) -> u64 {
    let reach = transitive_closure(s);
    (0..s.len()).filter(|&x| x != y.index() && reach[y.index()][x]).count() as u64
}

/// Reveals due transactions one at a time and checks every cache against
/// its oracle after each reveal.
fn reveal_checked(s: &mut TangleState, t: f64) -> Result<(), TestCaseError> {
    while s.next_reveal_time().is_some_and(|r| r <= t) {
        let before = total_weight(s);
        let id = s.reveal_next().unwrap();
        let cone = ancestors(s, id);
        prop_assert_eq!(total_weight(s), before + cone + 1);
        let mut tips = s.tips().to_vec();
        tips.sort();
        prop_assert_eq!(&tips, &tips_from_definition(s));
        prop_assert_eq!(&tips, &s.rescan_tips());
        let oracle = ancestor_count_weights(s);
        for x in s.ids().filter(|&x| s.is_revealed(x)) {
            prop_assert_eq!(s.weight(x), oracle[x.index()]);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn caches_agree_with_oracles(ops in prop::collection::vec(op(), 1..160)) {
        let mut s = TangleState::new(true);
        let mut t = 0.0;
        for o in ops {
            match o {
                Op::Issue(a, b) => {
                    let visible: Vec<TxId> = s.ids().filter(|&x| s.is_revealed(x)).collect();
                    let pick = |k: u16| visible[k as usize % visible.len()];
                    let id = s.add_transaction([pick(a), pick(b)], t).unwrap();
                    prop_assert!(!s.is_revealed(id));
                }
                Op::Advance(dt) => {
                    t += dt;
                    reveal_checked(&mut s, t)?;
                }
            }
        }
        reveal_checked(&mut s, f64::INFINITY)?;
        prop_assert_eq!(s.pending_count(), 0);
    }

    #[test]
    fn softmax_is_normalized_and_shift_invariant(
        w in prop::collection::vec(1.0f64..1e6, 1..12),
        alpha in 0.0f64..5.0,
        shift in -1e5f64..1e5,
    ) {
        let p = softmax(&w, alpha);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        let shifted: Vec<f64> = w.iter().map(|x| x + shift).collect();
        for (a, b) in p.iter().zip(softmax(&shifted, alpha)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn simulated_tangles_are_well_formed(seed in any::<u64>(), alpha in prop_oneof![Just(0.0), 0.0f64..0.5], urts in any::<bool>()) {
        let selector = if urts { SelectorKind::Urts } else { SelectorKind::Walk { alpha } };
        let cfg = SimConfig::new(15.0, selector).with_max_transactions(300).with_warmup(0.0).with_seed(seed);
        let s = run_simulation(&cfg, &mut []).unwrap().state;
        for y in s.ids().skip(1) {
            for p in s.parents(y).unwrap() {
                prop_assert!(p < y);
                prop_assert!(s.reveal_time(p) <= s.issue_time(y));
            }
        }
        if selector.needs_weights() {
            let oracle = ancestor_count_weights(&s);
            for x in s.ids().filter(|&x| s.is_revealed(x)) {
                prop_assert_eq!(s.weight(x), oracle[x.index()]);
            }
        }
    }

    #[test]
    fn walks_end_at_tips_in_bounded_steps(seed in any::<u64>(), alpha in 0.0f64..2.0) {
        let cfg = SimConfig::new(10.0, SelectorKind::Walk { alpha }).with_duration(20.0).with_warmup(0.0).with_seed(seed);
        let s = run_simulation(&cfg, &mut []).unwrap().state;
        let mut rng = stream(seed, Stream::Estimation);
        for _ in 0..50 {
            let mut x = TxId::GENESIS;
            let mut steps = 0;
            while let Ok(next) = walk_step(&s, x, alpha, &mut rng) {
                prop_assert!(s.is_revealed(next));
                x = next;
                steps += 1;
                prop_assert!(steps <= s.revealed_count());
            }
            prop_assert!(s.is_tip(x));
        }
    }

    #[test]
    fn hidden_transactions_do_not_change_selection(seed in any::<u64>(), extra in 1usize..20) {
        let cfg = SimConfig::new(10.0, SelectorKind::Walk { alpha: 0.2 }).with_duration(15.0).with_warmup(0.0).with_seed(seed);
        let mut s = run_simulation(&cfg, &mut []).unwrap().state;
        s.drain();
        let draw = |s: &TangleState| {
            let mut rng = stream(seed, Stream::TipSelection);
            (0..20).map(|_| select_pair(s, SelectorKind::Walk { alpha: 0.2 }, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        let before = draw(&s);
        let t = s.now();
        let mut prev = s.tips()[0];
        for _ in 0..extra {
            prev = s.add_private_transaction([prev, prev], t).unwrap();
        }
        s.add_transaction([TxId::GENESIS, s.tips()[0]], t).unwrap();
        prop_assert_eq!(before, draw(&s));
    }
}

#[test]
fn genesis_confidence_is_one() {
    let cfg =
        SimConfig::new(20.0, SelectorKind::Walk { alpha: 0.01 }).with_duration(30.0).with_warmup(0.0).with_seed(4);
    let s = run_simulation(&cfg, &mut []).unwrap().state;
    for kind in [SelectorKind::Urts, SelectorKind::Walk { alpha: 0.0 }, SelectorKind::Walk { alpha: 0.01 }] {
        assert_eq!(confidence_level(&s, TxId::GENESIS, kind, 10_000, 1).unwrap(), 1.0);
    }
}

#[test]
fn reruns_are_bit_identical() {
    for selector in [SelectorKind::Urts, SelectorKind::Walk { alpha: 0.0 }, SelectorKind::Walk { alpha: 0.05 }] {
        let cfg = SimConfig::new(30.0, selector).with_duration(40.0).with_warmup(0.0).with_seed(99);
        let dump = || {
            let mut buf = Vec::new();
            run_simulation(&cfg, &mut []).unwrap().state.write_edge_list(&mut buf).unwrap();
            buf
        };
        assert_eq!(dump(), dump());
    }
}

/// Compares the incremental tip set with a full rescan after every reveal.
struct TipAudit {
    checks: usize,
}

impl Observer for TipAudit {
    fn on_reveal(&mut self, state: &TangleState, _id: TxId) {
        let mut tips = state.tips().to_vec();
        tips.sort();
        assert_eq!(tips, state.rescan_tips());
        self.checks += 1;
    }
}

#[test]
fn tip_set_matches_rescan_during_runs() {
    for selector in [SelectorKind::Urts, SelectorKind::Walk { alpha: 0.0 }] {
        let mut audit = TipAudit { checks: 0 };
        let cfg = SimConfig::new(20.0, selector).with_max_transactions(1000).with_warmup(0.0).with_seed(21);
        run_simulation(&cfg, &mut [&mut audit]).unwrap();
        assert!(audit.checks > 900);
    }
}
