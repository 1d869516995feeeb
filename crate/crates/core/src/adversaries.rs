//! Attack strategies: functions from a filtered trace to a guess bit, plus the
//! interactive dropping strategy.
//!
//! A guess is the index of the scenario the attack believes was played.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coins::Coins;
use crate::error::{Error, Result};
use crate::model::{
    AdversaryCapability, Aux, Content, EventKind, Location, MessageId, ObservationEvent,
    ObservationTrace, UserId,
};
use crate::notions::ScenarioPair;
use crate::protocols::DropAction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Counting,
    TimingInterval,
    PathTracing,
    Dropping,
    RandomGuess,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::Counting,
        AttackKind::TimingInterval,
        AttackKind::PathTracing,
        AttackKind::Dropping,
        AttackKind::RandomGuess,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::Counting => "counting",
            AttackKind::TimingInterval => "timing-interval",
            AttackKind::PathTracing => "path-tracing",
            AttackKind::Dropping => "dropping",
            AttackKind::RandomGuess => "random-guess",
        }
    }

    /// Fails with a capability violation when `cap` cannot support this attack on `pair`.
    pub fn check(&self, cap: &AdversaryCapability, pair: &ScenarioPair) -> Result<()> {
        let deny = |msg: &str| Err(Error::CapabilityViolation(format!("{}: {msg}", self.name())));
        match self {
            AttackKind::Counting => {
                if !cap.receiver_corrupted && !cap.knows_total_real {
                    return deny("needs a corrupted receiver or the total number of real messages");
                }
            }
            AttackKind::TimingInterval | AttackKind::PathTracing => {
                let ch = Challenge::from_pair(pair)?;
                if !ch.suspects.iter().all(|&u| cap.observes(u)) {
                    return deny("both suspects' links must be observed");
                }
                if !cap.receiver_corrupted {
                    return deny("the challenge arrival must be visible at a corrupted receiver");
                }
            }
            AttackKind::Dropping => {
                if !cap.active_drop || !cap.knows_expected_reception || !cap.receiver_corrupted {
                    return deny("needs active dropping and a corrupted receiver expecting the message");
                }
                Challenge::from_pair(pair)?;
            }
            AttackKind::RandomGuess => {}
        }
        Ok(())
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "timing" => return Ok(AttackKind::TimingInterval),
            "tracing" => return Ok(AttackKind::PathTracing),
            "random" => return Ok(AttackKind::RandomGuess),
            _ => {}
        }
        AttackKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown attack '{s}'")))
    }
}

/// The row whose sender the attacks try to identify.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Challenge {
    pub row: usize,
    /// Sender of the row in scenario 0 and in scenario 1.
    pub suspects: [UserId; 2],
    pub message: MessageId,
    pub aux: Aux,
}

impl Challenge {
    /// First row that carries the same message in both scenarios but has different senders.
    pub fn from_pair(pair: &ScenarioPair) -> Result<Challenge> {
        let rows = pair.batch0.comms().iter().zip(pair.batch1.comms());
        for (row, (c0, c1)) in rows.enumerate() {
            if let (Some(s0), Some(s1)) = (c0.sender(), c1.sender()) {
                if s0 != s1 && c0.message() == c1.message() && c0.aux() == c1.aux() {
                    return Ok(Challenge {
                        row,
                        suspects: [s0, s1],
                        message: c0.message().expect("send row"),
                        aux: c0.aux().expect("send row"),
                    });
                }
            }
        }
        Err(Error::InvalidInput(
            "pair has no row with a shared message and different senders".into(),
        ))
    }

    fn content(&self) -> Content {
        Content::Message { message: self.message, aux: self.aux }
    }

    fn guess_for(&self, sender: UserId) -> Option<u8> {
        if sender == self.suspects[0] {
            Some(0)
        } else if sender == self.suspects[1] {
            Some(1)
        } else {
            None
        }
    }
}

fn coin(coins: &mut dyn Coins) -> u8 {
    coins.uniform(2) as u8
}

fn single(flags: [bool; 2], coins: &mut dyn Coins) -> u8 {
    match flags {
        [true, false] => 0,
        [false, true] => 1,
        _ => coin(coins),
    }
}

/// Guesses the only scenario in which every observed user sent at least as many
/// packets as that scenario needs them to have sent real messages.
pub fn counting_guess(
    trace: &ObservationTrace,
    cap: &AdversaryCapability,
    pair: &ScenarioPair,
    coins: &mut dyn Coins,
) -> Result<u8> {
    AttackKind::Counting.check(cap, pair)?;
    let mut sent: BTreeMap<UserId, usize> = cap.observed_senders.iter().map(|&u| (u, 0)).collect();
    let mut delivered: BTreeMap<(MessageId, Aux), usize> = BTreeMap::new();
    for e in trace.events() {
        match (e.kind, e.location, e.content) {
            (EventKind::Send, Location::User(u), _) => {
                if let Some(c) = sent.get_mut(&u) {
                    *c += 1;
                }
            }
            (EventKind::Deliver, Location::User(_), Content::Message { message, aux }) => {
                *delivered.entry((message, aux)).or_default() += 1;
            }
            _ => {}
        }
    }
    let consistent = [0u8, 1].map(|b| {
        let mut left = delivered.clone();
        let mut needed: BTreeMap<UserId, usize> = BTreeMap::new();
        for c in pair.batch(b).comms() {
            let (Some(u), Some(m), Some(a)) = (c.sender(), c.message(), c.aux()) else {
                continue;
            };
            let counts = if cap.receiver_corrupted {
                match left.get_mut(&(m, a)) {
                    Some(k) if *k > 0 => {
                        *k -= 1;
                        true
                    }
                    _ => false,
                }
            } else {
                true
            };
            if counts {
                *needed.entry(u).or_default() += 1;
            }
        }
        sent.iter().all(|(u, &l)| l >= needed.get(u).copied().unwrap_or(0))
    });
    Ok(single(consistent, coins))
}

fn arrival<'a>(trace: &'a ObservationTrace, ch: &Challenge) -> Option<&'a ObservationEvent> {
    trace
        .events()
        .iter()
        .filter(|e| {
            e.kind == EventKind::Deliver
                && matches!(e.location, Location::User(_))
                && e.content == ch.content()
        })
        .min_by_key(|e| e.round)
}

fn window(arrival: u32, l_max: u32) -> std::ops::RangeInclusive<u32> {
    (arrival + 1).saturating_sub(l_max)..=arrival.saturating_sub(1)
}

fn sends_of(trace: &ObservationTrace, u: UserId) -> impl Iterator<Item = &ObservationEvent> {
    trace
        .events()
        .iter()
        .filter(move |e| e.kind == EventKind::Send && e.location == Location::User(u))
}

/// Excludes a suspect that sent nothing in the `l_max - 1` rounds before the
/// challenge arrived.
pub fn timing_guess(
    trace: &ObservationTrace,
    cap: &AdversaryCapability,
    pair: &ScenarioPair,
    l_max: u32,
    coins: &mut dyn Coins,
) -> Result<u8> {
    AttackKind::TimingInterval.check(cap, pair)?;
    let ch = Challenge::from_pair(pair)?;
    let Some(a) = arrival(trace, &ch) else {
        return Ok(coin(coins));
    };
    for (i, &s) in ch.suspects.iter().enumerate() {
        if sends_of(trace, s).any(|e| e.packet == a.packet) {
            return Ok(i as u8);
        }
    }
    let w = window(a.round, l_max);
    let flags = ch.suspects.map(|s| sends_of(trace, s).any(|e| w.contains(&e.round)));
    Ok(single(flags, coins))
}

/// Follows packets through compromised relays: the challenge backwards to its
/// sender, and each suspect's sends forwards to a drop or an unrelated delivery.
/// Without compromised relays this is the timing attack.
pub fn tracing_guess(
    trace: &ObservationTrace,
    cap: &AdversaryCapability,
    pair: &ScenarioPair,
    l_max: u32,
    coins: &mut dyn Coins,
) -> Result<u8> {
    AttackKind::PathTracing.check(cap, pair)?;
    let ch = Challenge::from_pair(pair)?;
    let Some(a) = arrival(trace, &ch) else {
        return Ok(coin(coins));
    };
    let forwards: BTreeMap<u64, &ObservationEvent> = trace
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::Forward)
        .map(|e| (e.packet, e))
        .collect();
    let by_prev: BTreeMap<u64, &ObservationEvent> = forwards
        .values()
        .filter_map(|e| e.prev.map(|p| (p, *e)))
        .collect();

    let mut origin = a.packet;
    let mut seen = BTreeSet::new();
    while let Some(f) = forwards.get(&origin) {
        match f.prev {
            Some(p) if seen.insert(p) => origin = p,
            _ => break,
        }
    }
    for e in trace.events() {
        if e.kind == EventKind::Send && e.packet == origin {
            if let Location::User(u) = e.location {
                if let Some(g) = ch.guess_for(u) {
                    return Ok(g);
                }
            }
        }
    }

    let ends: BTreeMap<u64, &ObservationEvent> = trace
        .events()
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Drop | EventKind::Deliver))
        .map(|e| (e.packet, e))
        .collect();
    let explained = |start: u64| {
        let mut q = start;
        loop {
            if let Some(end) = ends.get(&q) {
                return match end.kind {
                    EventKind::Drop => true,
                    _ => !(end.packet == a.packet && end.round == a.round),
                };
            }
            match by_prev.get(&q) {
                Some(f) => q = f.packet,
                None => return false,
            }
        }
    };
    let w = window(a.round, l_max);
    let flags = ch
        .suspects
        .map(|s| sends_of(trace, s).any(|e| w.contains(&e.round) && !explained(e.packet)));
    Ok(single(flags, coins))
}

/// Drops every packet of the scenario-0 sender it can reach and watches for the
/// challenge message. Arrival means the other suspect sent it.
#[derive(Clone, Debug)]
pub struct DroppingStrategy {
    challenge: Challenge,
    arrived: bool,
}

impl DroppingStrategy {
    pub fn new(cap: &AdversaryCapability, pair: &ScenarioPair) -> Result<Self> {
        AttackKind::Dropping.check(cap, pair)?;
        Ok(DroppingStrategy { challenge: Challenge::from_pair(pair)?, arrived: false })
    }

    pub fn victim(&self) -> UserId {
        self.challenge.suspects[0]
    }

    /// Consumes one round of observations and returns the drops to apply before the next round.
    pub fn react(&mut self, events: &[ObservationEvent], cap: &AdversaryCapability) -> Vec<DropAction> {
        let victim = Location::User(self.victim());
        let mut out = Vec::new();
        for e in events {
            if e.kind == EventKind::Deliver && e.content == self.challenge.content() {
                self.arrived = true;
            }
            if e.kind != EventKind::Send || e.location != victim {
                continue;
            }
            let link = Location::Link(self.victim());
            if cap.controls(link) {
                out.push(DropAction { packet: e.packet, location: link });
            } else if let Some(next @ Location::Relay(_)) = e.next {
                if cap.controls(next) {
                    out.push(DropAction { packet: e.packet, location: next });
                }
            }
        }
        out
    }

    pub fn guess(&self) -> u8 {
        self.arrived as u8
    }
}
