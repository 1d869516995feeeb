//! The indistinguishability game: Monte Carlo estimation, exact enumeration and
//! the two equivalent advantage definitions.

use std::cell::RefCell;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversaries::{
    counting_guess, timing_guess, tracing_guess, AttackKind, DroppingStrategy,
};
use crate::coins::{expectation, Coins, RngCoins};
use crate::error::{invalid, Error, Result};
use crate::model::{AdversaryCapability, ProtocolParams};
use crate::notions::ScenarioPair;
use crate::protocols::{execute, Protocol, Session};

pub const MIN_TRIALS: u64 = 100;

/// Outcome cap for [`exact_advantage`], per challenge bit.
pub const MAX_LEAVES: u64 = 1 << 22;

const Z95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Definition {
    #[default]
    CountingForm,
    OptimalityForm,
}

impl Definition {
    pub fn name(&self) -> &'static str {
        match self {
            Definition::CountingForm => "counting-form",
            Definition::OptimalityForm => "optimality-form",
        }
    }
}

impl std::str::FromStr for Definition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counting-form" | "counting" => Ok(Definition::CountingForm),
            "optimality-form" | "optimality" => Ok(Definition::OptimalityForm),
            _ => invalid(format!("unknown advantage definition '{s}'")),
        }
    }
}

/// A protocol, an attack with its capability, and the challenge pair.
#[derive(Clone, Debug)]
pub struct Game {
    pub protocol: Protocol,
    pub attack: AttackKind,
    pub capability: AdversaryCapability,
    pub pair: ScenarioPair,
}

impl Game {
    pub fn new(
        protocol: Protocol,
        attack: AttackKind,
        capability: AdversaryCapability,
        pair: ScenarioPair,
    ) -> Result<Self> {
        capability.validate(protocol.params.k)?;
        attack.check(&capability, &pair)?;
        Ok(Game { protocol, attack, capability, pair })
    }

    /// Plays scenario `b` once and returns the adversary's guess.
    pub fn play(&self, b: u8, protocol_coins: &mut dyn Coins, adversary_coins: &mut dyn Coins) -> Result<u8> {
        let batch = self.pair.batch(b);
        let cap = &self.capability;
        let l_max = self.protocol.params.l_max;
        match self.attack {
            AttackKind::Dropping => {
                let mut strategy = DroppingStrategy::new(cap, &self.pair)?;
                let mut session = Session::start(&self.protocol, batch, cap, protocol_coins)?;
                let mut actions = Vec::new();
                while !session.finished() {
                    let seen = session.step(protocol_coins, &actions)?;
                    actions = strategy.react(&seen, cap);
                }
                Ok(strategy.guess())
            }
            AttackKind::RandomGuess => {
                execute(&self.protocol, batch, cap, protocol_coins)?;
                Ok(adversary_coins.uniform(2) as u8)
            }
            kind => {
                let view = execute(&self.protocol, batch, cap, protocol_coins)?.view;
                match kind {
                    AttackKind::Counting => counting_guess(&view, cap, &self.pair, adversary_coins),
                    AttackKind::TimingInterval => {
                        timing_guess(&view, cap, &self.pair, l_max, adversary_coins)
                    }
                    _ => tracing_guess(&view, cap, &self.pair, l_max, adversary_coins),
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EstimateOptions {
    /// Worker threads; `None` uses the global pool. Never changes results.
    pub workers: Option<usize>,
    pub definition: Definition,
}

/// Per-arm guess counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub n0: u64,
    pub ones0: u64,
    pub n1: u64,
    pub ones1: u64,
}

impl Tally {
    fn add(self, o: Tally) -> Tally {
        Tally {
            n0: self.n0 + o.n0,
            ones0: self.ones0 + o.ones0,
            n1: self.n1 + o.n1,
            ones1: self.ones1 + o.ones1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub definition: Definition,
    pub tally: Tally,
}

impl AdvantageEstimate {
    /// Standard error of the point estimate.
    pub fn sigma(&self) -> f64 {
        let t = &self.tally;
        let var = |k: u64, n: u64| {
            if n == 0 {
                return 0.0;
            }
            let p = k as f64 / n as f64;
            p * (1.0 - p) / n as f64
        };
        (var(t.ones0, t.n0) + var(t.ones1, t.n1)).sqrt()
    }
}

/// The challenge bit of trial `i`, independent of scheduling.
pub fn trial_bit(seed: u64, i: u64) -> u8 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng.set_word_pos(2 * i as u128);
    (rng.next_u64() & 1) as u8
}

fn run_trial(game: &Game, seed: u64, i: u64) -> Result<Tally> {
    let b = trial_bit(seed, i);
    let mut pc = RngCoins::new(seed, 1 + 2 * i);
    let mut ac = RngCoins::new(seed, 2 + 2 * i);
    let g = game.play(b, &mut pc, &mut ac)? as u64;
    Ok(if b == 0 {
        Tally { n0: 1, ones0: g, ..Default::default() }
    } else {
        Tally { n1: 1, ones1: g, ..Default::default() }
    })
}

fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Estimates `Pr[1 | b=1] - Pr[1 | b=0]` over `trials` independent plays.
pub fn estimate_advantage(
    game: &Game,
    trials: u64,
    seed: u64,
    options: EstimateOptions,
) -> Result<AdvantageEstimate> {
    if trials < MIN_TRIALS {
        return invalid(format!("at least {MIN_TRIALS} trials are required, got {trials}"));
    }
    let work = || {
        (0..trials)
            .into_par_iter()
            .map(|i| run_trial(game, seed, i))
            .try_reduce(Tally::default, |a, b| Ok(a.add(b)))
    };
    let tally = match options.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(summarize(tally, options.definition))
}

/// Point estimate and interval from raw counts.
pub fn summarize(tally: Tally, definition: Definition) -> AdvantageEstimate {
    let rate = |k: u64, n: u64| if n == 0 { 0.5 } else { k as f64 / n as f64 };
    let p11 = rate(tally.ones1, tally.n1);
    let p10 = rate(tally.ones0, tally.n0);
    let forms = advantage_transform(p11, p10).expect("empirical rates lie in [0, 1]");
    let point = match definition {
        Definition::CountingForm => forms.counting,
        Definition::OptimalityForm => forms.optimality,
    };
    let (l1, u1) = wilson(tally.ones1, tally.n1);
    let (l0, u0) = wilson(tally.ones0, tally.n0);
    AdvantageEstimate {
        point,
        ci_low: (l1 - u0).clamp(-1.0, 1.0).min(point),
        ci_high: (u1 - l0).clamp(-1.0, 1.0).max(point),
        trials: tally.n0 + tally.n1,
        definition,
        tally,
    }
}

struct Shared<'a, 'b>(&'a RefCell<&'b mut dyn Coins>);

impl Coins for Shared<'_, '_> {
    fn choose(&mut self, weights: &[f64]) -> usize {
        self.0.borrow_mut().choose(weights)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.0.borrow_mut().bernoulli(p)
    }

    fn uniform(&mut self, k: usize) -> usize {
        self.0.borrow_mut().uniform(k)
    }
}

/// Exact advantage by enumerating every protocol and tie-break coin.
pub fn exact_advantage(game: &Game) -> Result<f64> {
    let mut arm = [0.0; 2];
    for b in 0..2u8 {
        arm[b as usize] = expectation(MAX_LEAVES, |coins| {
            // One enumerator drives both streams; the outcome tree is the product space.
            let cell = RefCell::new(coins);
            let guess = game.play(b, &mut Shared(&cell), &mut Shared(&cell))?;
            Ok(guess as f64)
        })?;
    }
    Ok(arm[1] - arm[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageForms {
    pub counting: f64,
    pub optimality: f64,
}

/// Both advantage definitions from `Pr[1 | b=1]` and `Pr[1 | b=0]`.
pub fn advantage_transform(p11: f64, p10: f64) -> Result<AdvantageForms> {
    for p in [p11, p10] {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("probability {p} is outside [0, 1]"));
        }
    }
    let correct = 0.5 * (1.0 - p10) + 0.5 * p11;
    Ok(AdvantageForms { counting: p11 - p10, optimality: 2.0 * correct - 1.0 })
}

/// Serializable record of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub protocol: String,
    pub attack: String,
    pub notion: String,
    pub params: ProtocolParams,
    pub trials: u64,
    pub seed: u64,
    pub point: f64,
    pub ci: [f64; 2],
    pub definition: Definition,
}

impl ResultRecord {
    pub fn new(game: &Game, estimate: &AdvantageEstimate, seed: u64) -> Self {
        ResultRecord {
            protocol: game.protocol.kind.name().to_string(),
            attack: game.attack.name().to_string(),
            notion: game.pair.notion.to_string(),
            params: game.protocol.params.clone(),
            trials: estimate.trials,
            seed,
            point: estimate.point,
            ci: [estimate.ci_low, estimate.ci_high],
            definition: estimate.definition,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Batch, Communication, OrderingMode};
    use crate::notions::{Notion, NotionKind};
    use crate::protocols::ProtocolKind;

    fn so_pair() -> ScenarioPair {
        ScenarioPair::new(
            Notion::new(NotionKind::SO),
            Batch::new(vec![Communication::new(0, 1, 9)], OrderingMode::Simultaneous).unwrap(),
            Batch::new(vec![Communication::new(1, 1, 9)], OrderingMode::Simultaneous).unwrap(),
        )
        .unwrap()
    }

    fn timing_game(n: u32, l_max: u32, p: f64) -> Game {
        let cap = AdversaryCapability {
            observed_senders: (0..n).collect(),
            receiver_corrupted: true,
            ..Default::default()
        };
        let proto = Protocol::new(ProtocolKind::TrilemmaUnsync, ProtocolParams::new(n, l_max).with_p(p)).unwrap();
        Game::new(proto, AttackKind::TimingInterval, cap, so_pair()).unwrap()
    }

    #[test]
    fn transform_examples() {
        let f = advantage_transform(0.8, 0.3).unwrap();
        assert!((f.counting - 0.5).abs() < 1e-12 && (f.optimality - 0.5).abs() < 1e-12);
        assert_eq!(advantage_transform(1.0, 0.0).unwrap().optimality, 1.0);
        assert!(advantage_transform(1.2, 0.0).is_err());
    }

    #[test]
    fn exact_timing_matches_closed_form() {
        for (p, want) in [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)] {
            let v = exact_advantage(&timing_game(2, 2, p)).unwrap();
            assert!((v - want).abs() < 1e-12, "p={p}: {v}");
        }
    }

    #[test]
    fn too_few_trials() {
        let r = estimate_advantage(&timing_game(2, 2, 0.5), 99, 1, EstimateOptions::default());
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn workers_do_not_change_estimates() {
        let g = timing_game(4, 3, 0.4);
        let a = estimate_advantage(&g, 500, 7, EstimateOptions { workers: Some(1), ..Default::default() }).unwrap();
        let b = estimate_advantage(&g, 500, 7, EstimateOptions { workers: Some(3), ..Default::default() }).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low <= a.point && a.point <= a.ci_high);
    }
}
