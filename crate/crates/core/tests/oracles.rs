//! Independent brute-force oracles for attack advantages, compared with the
//! library's exact enumeration and Monte Carlo estimates.

use acn_bounds::adversaries::{timing_guess, tracing_guess, AttackKind};
use acn_bounds::bounds::{trilemma_advantage, TrilemmaSetting};
use acn_bounds::coins::RngCoins;
use acn_bounds::game::{estimate_advantage, exact_advantage, EstimateOptions, Game};
use acn_bounds::model::{
    AdversaryCapability, Batch, Communication, Content, EventKind, ObservationTrace, OrderingMode,
    ProtocolParams,
};
use acn_bounds::notions::{Notion, NotionKind, ScenarioPair};
use acn_bounds::protocols::{execute, Protocol, ProtocolKind};

const QUARTERS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn pair(b0: &[(u32, u32, u32)], b1: &[(u32, u32, u32)]) -> ScenarioPair {
    let batch = |rows: &[(u32, u32, u32)]| {
        Batch::new(
            rows.iter().map(|&(s, r, m)| Communication::new(s, r, m)).collect(),
            OrderingMode::Simultaneous,
        )
        .unwrap()
    };
    ScenarioPair::new(Notion::new(NotionKind::SO), batch(b0), batch(b1)).unwrap()
}

fn single() -> ScenarioPair {
    pair(&[(0, 1, 7)], &[(1, 1, 7)])
}

fn watch(n: u32, c_p: u32) -> AdversaryCapability {
    AdversaryCapability {
        observed_senders: (0..n).collect(),
        receiver_corrupted: true,
        c_p,
        ..Default::default()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Ordered relay paths of length `h` over `k` relays.
fn paths(k: u32, h: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..h {
        let mut next = Vec::new();
        for p in &out {
            for r in (0..k).filter(|r| !p.contains(r)) {
                let mut q = p.clone();
                q.push(r);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Tracing against two users sending only dummies at rate `beta`, paths of two
/// relays out of three. Returns `2 Pr[correct] - 1`.
fn tracing_oracle(beta: f64, c_p: u32) -> f64 {
    let corrupt = |p: &Vec<u32>| p.iter().all(|&r| r < c_p);
    let all = paths(3, 2);
    let w = 1.0 / all.len() as f64;
    let mut correct = 0.0;
    for challenge in &all {
        if corrupt(challenge) {
            correct += w;
            continue;
        }
        // The other suspect's two sending opportunities inside the window.
        let mut clean = 0.0;
        for a in [None].into_iter().chain(all.iter().map(Some)) {
            for b in [None].into_iter().chain(all.iter().map(Some)) {
                let pr = |x: Option<&Vec<u32>>| match x {
                    None => 1.0 - beta,
                    Some(_) => beta * w,
                };
                let unexplained = |x: Option<&Vec<u32>>| x.is_some_and(|p| !corrupt(p));
                if !unexplained(a) && !unexplained(b) {
                    clean += pr(a) * pr(b);
                }
            }
        }
        correct += w * (clean + 0.5 * (1.0 - clean));
    }
    2.0 * correct - 1.0
}

fn tracing_game(beta: f64, c_p: u32) -> Game {
    let params = ProtocolParams::new(2, 3).with_l_exp(3.0).with_k(3).with_beta(beta);
    let proto = Protocol::new(ProtocolKind::OnionPath, params).unwrap();
    Game::new(proto, AttackKind::PathTracing, watch(2, c_p), single()).unwrap()
}

#[test]
fn tracing_matches_path_enumeration() {
    for c_p in 0..=3 {
        for beta in QUARTERS {
            let exact = exact_advantage(&tracing_game(beta, c_p)).unwrap();
            let oracle = tracing_oracle(beta, c_p);
            // Around 10^5 leaves weighted by thirds accumulate rounding.
            assert!((exact - oracle).abs() < 1e-10, "c_p={c_p} beta={beta}: {exact} vs {oracle}");
        }
    }
    let q = 1.0 - 0.5 + 0.5 / 3.0;
    assert!(close(tracing_oracle(0.5, 2), 1.0 / 3.0 + 2.0 / 3.0 * q * q));
    assert!(close(tracing_oracle(0.5, 1), 0.25));
}

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}

fn dropping_game(copies: u32, k: u32, c_a: u32) -> Game {
    let cap = AdversaryCapability {
        receiver_corrupted: true,
        active_drop: true,
        knows_expected_reception: true,
        c_a,
        ..Default::default()
    };
    let proto = Protocol::new(
        ProtocolKind::DroppingModel,
        ProtocolParams::new(3, 2).with_k(k).with_copies(copies),
    )
    .unwrap();
    Game::new(proto, AttackKind::Dropping, cap, pair(&[(0, 2, 9)], &[(1, 2, 9)])).unwrap()
}

#[test]
fn dropping_matches_first_hop_enumeration() {
    for copies in 1..=3 {
        for c_a in 1..=4 {
            let exact = exact_advantage(&dropping_game(copies, 4, c_a)).unwrap();
            // All copies must take corrupted first hops.
            let oracle = binom(c_a, copies) / binom(4, copies);
            assert!(close(exact, oracle), "copies={copies} c_a={c_a}: {exact} vs {oracle}");
        }
    }
}

#[test]
fn unsync_timing_equals_bound() {
    for l_max in 1..=3 {
        for p in QUARTERS {
            let proto = Protocol::new(ProtocolKind::TrilemmaUnsync, ProtocolParams::new(2, l_max).with_p(p)).unwrap();
            let g = Game::new(proto, AttackKind::TimingInterval, watch(2, 0), single()).unwrap();
            let exact = exact_advantage(&g).unwrap();
            let bound = trilemma_advantage(TrilemmaSetting::UnsyncImproved, l_max, 0.0, p, 2).unwrap().delta;
            assert!(close(exact, bound), "l_max={l_max} p={p}: {exact} vs {bound}");
        }
    }
}

#[test]
fn sync_timing_dominates_bound() {
    for n in 2..=3u32 {
        for l_max in 1..=3 {
            for beta in QUARTERS {
                if beta * n as f64 > (n - 1) as f64 || (n == 3 && l_max == 3) {
                    continue;
                }
                let proto = Protocol::new(
                    ProtocolKind::TrilemmaSync,
                    ProtocolParams::new(n, l_max).with_beta(beta),
                )
                .unwrap();
                let g = Game::new(proto, AttackKind::TimingInterval, watch(n, 0), single()).unwrap();
                let exact = exact_advantage(&g).unwrap();
                let bound = trilemma_advantage(TrilemmaSetting::Sync, l_max, beta, 0.0, n).unwrap().delta;
                assert!(exact >= bound - 1e-12, "n={n} l_max={l_max} beta={beta}: {exact} < {bound}");
                if l_max == 2 {
                    // Exactly one round in the window; the other suspect is a dummy sender w.p. beta n / (n - 1).
                    let oracle = 1.0 - beta * n as f64 / (n - 1) as f64;
                    assert!(close(exact, oracle), "n={n} beta={beta}: {exact} vs {oracle}");
                }
                if l_max == 1 {
                    assert_eq!(exact, 1.0);
                }
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let timing = {
        let proto = Protocol::new(ProtocolKind::TrilemmaUnsync, ProtocolParams::new(2, 2).with_p(0.5)).unwrap();
        Game::new(proto, AttackKind::TimingInterval, watch(2, 0), single()).unwrap()
    };
    let sync = {
        let proto = Protocol::new(ProtocolKind::TrilemmaSync, ProtocolParams::new(3, 3).with_beta(0.25)).unwrap();
        Game::new(proto, AttackKind::TimingInterval, watch(3, 0), single()).unwrap()
    };
    for (name, g) in [
        ("timing", timing),
        ("sync", sync),
        ("tracing", tracing_game(0.5, 2)),
        ("dropping", dropping_game(2, 4, 2)),
    ] {
        let exact = exact_advantage(&g).unwrap();
        let est = estimate_advantage(&g, 100_000, 11, EstimateOptions::default()).unwrap();
        let tol = 4.0 * est.sigma();
        assert!((est.point - exact).abs() <= tol, "{name}: {} vs {exact} (4 sigma = {tol})", est.point);
    }
}

#[test]
fn random_guess_has_no_advantage() {
    let kinds = [
        (ProtocolKind::TrilemmaSync, ProtocolParams::new(3, 2).with_beta(0.3)),
        (ProtocolKind::TrilemmaUnsync, ProtocolParams::new(3, 2).with_p(0.3)),
        (ProtocolKind::OnionPath, ProtocolParams::new(3, 3).with_p(0.3)),
        (ProtocolKind::ThresholdMix, ProtocolParams::new(3, 1).with_p(0.5).with_threshold(2)),
        (ProtocolKind::DcnetRound, ProtocolParams::new(3, 1).with_p(0.3)),
        (ProtocolKind::DcnetScheduled, ProtocolParams::new(3, 1).with_p(0.3)),
        (ProtocolKind::BroadcastFullDummy, ProtocolParams::new(3, 1)),
        (ProtocolKind::DroppingModel, ProtocolParams::new(3, 2).with_k(2)),
    ];
    for (kind, params) in kinds {
        let proto = Protocol::new(kind, params).unwrap();
        let g = Game::new(proto, AttackKind::RandomGuess, watch(3, 0), single()).unwrap();
        let est = estimate_advantage(&g, 100_000, 21, EstimateOptions::default()).unwrap();
        assert!(est.point.abs() <= 3.0 * est.sigma(), "{kind}: {} (sigma {})", est.point, est.sigma());
    }
}

#[test]
fn guesses_ignore_hidden_fields() {
    let params = ProtocolParams::new(4, 3).with_k(3).with_beta(0.3).with_p(0.5).with_rounds(5);
    let proto = Protocol::new(ProtocolKind::TrilemmaUnsync, params).unwrap();
    let cap = watch(4, 1);
    let p = single();
    for seed in 0..200 {
        let ex = execute(&proto, p.batch((seed % 2) as u8), &cap, &mut RngCoins::new(seed, 1)).unwrap();
        let mut noisy = ex.full.clone();
        for e in &mut noisy.events {
            if matches!(e.kind, EventKind::Send | EventKind::Forward) {
                e.is_real = e.is_real.map(|r| !r);
                e.content = Content::Message { message: 4242, aux: 1 };
            }
        }
        let a: ObservationTrace = ex.full.filter(&cap);
        let b = noisy.filter(&cap);
        assert_eq!(a, b);
        let g1 = tracing_guess(&a, &cap, &p, 3, &mut RngCoins::new(seed, 2)).unwrap();
        let g2 = tracing_guess(&b, &cap, &p, 3, &mut RngCoins::new(seed, 2)).unwrap();
        assert_eq!(g1, g2);
    }
}

#[test]
fn tracing_without_compromise_is_timing() {
    let params = ProtocolParams::new(3, 3).with_beta(0.4).with_p(0.6).with_rounds(4);
    let proto = Protocol::new(ProtocolKind::TrilemmaUnsync, params).unwrap();
    let cap = watch(3, 0);
    let p = single();
    for seed in 0..300 {
        let view = execute(&proto, p.batch((seed % 2) as u8), &cap, &mut RngCoins::new(seed, 1)).unwrap().view;
        let t = timing_guess(&view, &cap, &p, 3, &mut RngCoins::new(seed, 2)).unwrap();
        let r = tracing_guess(&view, &cap, &p, 3, &mut RngCoins::new(seed, 2)).unwrap();
        assert_eq!(t, r, "seed {seed}");
    }
}

#[test]
fn full_compromise_traces_with_certainty() {
    let params = ProtocolParams::new(2, 3).with_k(2).with_beta(1.0);
    let proto = Protocol::new(ProtocolKind::TrilemmaUnsync, params).unwrap();
    let g = Game::new(proto, AttackKind::PathTracing, watch(2, 2), single()).unwrap();
    assert!(close(exact_advantage(&g).unwrap(), 1.0));
}

#[test]
fn alternative_always_sending_defeats_timing() {
    for l_max in 2..=3 {
        let proto = Protocol::new(ProtocolKind::TrilemmaUnsync, ProtocolParams::new(2, l_max).with_p(1.0)).unwrap();
        let g = Game::new(proto, AttackKind::TimingInterval, watch(2, 0), single()).unwrap();
        assert_eq!(exact_advantage(&g).unwrap(), 0.0);
    }
}

#[test]
fn counting_without_dummies_is_certain() {
    let proto = Protocol::new(ProtocolKind::OnionPath, ProtocolParams::new(3, 3)).unwrap();
    let p = pair(&[(0, 2, 1), (0, 2, 2)], &[(0, 2, 1), (1, 2, 2)]);
    let g = Game::new(proto, AttackKind::Counting, watch(3, 0), p).unwrap();
    assert_eq!(exact_advantage(&g).unwrap(), 1.0);
}
