//! Round-based reference protocols that execute a batch and emit observations.
//!
//! Latency is counted in rounds touched: a packet sent in round `s` that crosses
//! `h` relays (one per round) is delivered in round `s + h`, so `l_max` allows
//! paths of at most `l_max - 1` relays and `l_max = 1` means direct delivery.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coins::{Coins, RngCoins};
use crate::error::{invalid, Error, Result};
use crate::model::{
    AdversaryCapability, Batch, Communication, Content, EventKind, Location, ObservationEvent,
    ObservationTrace, OrderingMode, ProtocolParams, RelayId, UserId,
};
use crate::notions::ScenarioPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    /// One real message per round; a synchronized set of about `beta * n` others send dummies.
    TrilemmaSync,
    /// Every user independently sends a real message w.p. `p'` or a dummy w.p. `beta`.
    TrilemmaUnsync,
    /// Like the unsynchronized model, with path lengths averaging `l_exp`.
    OnionPath,
    /// A single mix that flushes once it holds `threshold` packets.
    ThresholdMix,
    /// Superposed sending without scheduling; simultaneous senders collide.
    DcnetRound,
    /// Superposed sending with one slot per user and round-robin slots.
    DcnetScheduled,
    /// Every user sends every round; the server delivers only real messages.
    BroadcastFullDummy,
    /// Batch rows leave as `copies` packets over distinct first hops.
    DroppingModel,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 8] = [
        ProtocolKind::TrilemmaSync,
        ProtocolKind::TrilemmaUnsync,
        ProtocolKind::OnionPath,
        ProtocolKind::ThresholdMix,
        ProtocolKind::DcnetRound,
        ProtocolKind::DcnetScheduled,
        ProtocolKind::BroadcastFullDummy,
        ProtocolKind::DroppingModel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::TrilemmaSync => "trilemma-sync",
            ProtocolKind::TrilemmaUnsync => "trilemma-unsync",
            ProtocolKind::OnionPath => "onion-path",
            ProtocolKind::ThresholdMix => "threshold-mix",
            ProtocolKind::DcnetRound => "dcnet-round",
            ProtocolKind::DcnetScheduled => "dcnet-scheduled",
            ProtocolKind::BroadcastFullDummy => "broadcast-full-dummy",
            ProtocolKind::DroppingModel => "dropping-model",
        }
    }

    fn first_row_round(&self, l_max: u32) -> u32 {
        match self {
            ProtocolKind::TrilemmaSync
            | ProtocolKind::TrilemmaUnsync
            | ProtocolKind::OnionPath
            | ProtocolKind::DroppingModel => l_max.saturating_sub(1).max(1),
            _ => 1,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown protocol '{s}'")))
    }
}

/// A protocol kind with checked parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub params: ProtocolParams,
}

fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl Protocol {
    pub fn new(kind: ProtocolKind, params: ProtocolParams) -> Result<Self> {
        params.validate()?;
        let p = &params;
        match kind {
            ProtocolKind::TrilemmaSync | ProtocolKind::TrilemmaUnsync => {
                if p.k < p.l_max.saturating_sub(1) {
                    return config(format!(
                        "paths of up to {} relays need K >= {}, got {}",
                        p.l_max - 1,
                        p.l_max - 1,
                        p.k
                    ));
                }
            }
            ProtocolKind::OnionPath => {
                if p.l_exp < 1.0 {
                    return config("onion paths need l_exp >= 1");
                }
                if (p.k as f64) < p.l_exp.ceil() - 1.0 {
                    return config(format!("l_exp {} needs more than {} relays", p.l_exp, p.k));
                }
            }
            ProtocolKind::ThresholdMix => {
                if p.threshold == 0 {
                    return config("threshold must be at least 1");
                }
            }
            ProtocolKind::DroppingModel => {
                if p.copies == 0 {
                    return config("copies must be at least 1");
                }
                if p.copies > p.k {
                    return config(format!("{} copies need distinct first hops among K = {}", p.copies, p.k));
                }
                if p.l_max < 2 {
                    return config("one relay per copy needs l_max >= 2");
                }
            }
            _ => {}
        }
        Ok(Protocol { kind, params })
    }
}

/// Drop request of an active adversary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DropAction {
    pub packet: u64,
    pub location: Location,
}

const BACKGROUND_BASE: u32 = 1 << 31;

fn packet_id(counter: u64) -> u64 {
    let mut z = counter.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
struct Packet {
    id: u64,
    origin: UserId,
    real: bool,
    content: Content,
    receiver: UserId,
    hops: Vec<RelayId>,
    hop: usize,
    due: u32,
    sent: u32,
}

/// A running execution, advanced one round per [`Session::step`].
pub struct Session {
    protocol: Protocol,
    capability: AdversaryCapability,
    schedule: BTreeMap<u32, Communication>,
    horizon: u32,
    round: u32,
    flight: Vec<Packet>,
    pool: Vec<Packet>,
    counter: u64,
    background: u32,
    trace: Vec<ObservationEvent>,
}

fn distinct(coins: &mut dyn Coins, k: u32, h: usize) -> Vec<RelayId> {
    let mut all: Vec<RelayId> = (0..k).collect();
    for i in 0..h {
        let j = i + coins.uniform(all.len() - i);
        all.swap(i, j);
    }
    all.truncate(h);
    all
}

impl Session {
    pub fn start(
        protocol: &Protocol,
        batch: &Batch,
        capability: &AdversaryCapability,
        coins: &mut dyn Coins,
    ) -> Result<Session> {
        let p = &protocol.params;
        capability.validate(p.k)?;
        let real_rows = batch.comms().iter().filter(|c| !c.is_empty()).count();
        if protocol.kind == ProtocolKind::ThresholdMix
            && real_rows < p.threshold as usize
            && p.p() == 0.0
        {
            return config(format!(
                "threshold {} is never reached by {real_rows} messages without other traffic",
                p.threshold
            ));
        }
        for c in batch.comms() {
            if let Some(u) = c.sender() {
                if u >= p.n {
                    return invalid(format!("sender {u} is not one of the {} users", p.n));
                }
            }
        }
        let mut order: Vec<usize> = (0..batch.len()).collect();
        if batch.mode() == OrderingMode::RandomPermutation {
            for i in (1..order.len()).rev() {
                let j = coins.uniform(i + 1);
                order.swap(i, j);
            }
        }
        let mut schedule = BTreeMap::new();
        let first = protocol.kind.first_row_round(p.l_max);
        let mut last = first + batch.len() as u32 - 1;
        if protocol.kind == ProtocolKind::DcnetScheduled {
            let mut next_slot: Vec<u32> = (0..p.n).map(|u| u + 1).collect();
            last = 1;
            for &i in &order {
                if let Some(u) = batch.comms()[i].sender() {
                    let t = next_slot[u as usize];
                    next_slot[u as usize] += p.n;
                    schedule.insert(t, batch.comms()[i]);
                    last = last.max(t);
                }
            }
        } else {
            for (j, &i) in order.iter().enumerate() {
                let c = batch.comms()[i];
                if !c.is_empty() {
                    schedule.insert(first + j as u32, c);
                }
            }
        }
        let tail = match protocol.kind {
            ProtocolKind::TrilemmaSync | ProtocolKind::TrilemmaUnsync | ProtocolKind::OnionPath => {
                p.l_max.saturating_sub(2)
            }
            _ => 0,
        };
        Ok(Session {
            protocol: protocol.clone(),
            capability: capability.clone(),
            schedule,
            horizon: p.rounds.max(last + tail),
            round: 0,
            flight: Vec::new(),
            pool: Vec::new(),
            counter: 0,
            background: 0,
            trace: Vec::new(),
        })
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    /// Last round in which users send.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn finished(&self) -> bool {
        self.round >= self.horizon
            && self.flight.is_empty()
            && self.pool.len() < self.protocol.params.threshold.max(1) as usize
    }

    /// Everything that happened so far, unfiltered.
    pub fn full_trace(&self) -> ObservationTrace {
        ObservationTrace::new(self.trace.clone())
    }

    fn fresh(&mut self) -> u64 {
        self.counter += 1;
        packet_id(self.counter)
    }

    fn location_of(&self, p: &Packet) -> [Option<Location>; 2] {
        let relay = p.hops.get(p.hop).map(|&r| Location::Relay(r));
        let link = (p.hop == 0 && p.sent == self.round).then_some(Location::Link(p.origin));
        [relay, link]
    }

    /// Applies `actions` to packets sent or forwarded in the current round, then
    /// plays the next round. Returns what the capability sees of both.
    ///
    /// Dropping where the adversary has no control is a capability violation.
    pub fn step(
        &mut self,
        coins: &mut dyn Coins,
        actions: &[DropAction],
    ) -> Result<Vec<ObservationEvent>> {
        let mut out = Vec::new();
        for a in actions {
            if !self.capability.controls(a.location) {
                return Err(Error::CapabilityViolation(format!(
                    "no control over {:?}",
                    a.location
                )));
            }
            let in_flight = self
                .flight
                .iter()
                .position(|p| p.id == a.packet && self.location_of(p).contains(&Some(a.location)));
            let packet = if let Some(i) = in_flight {
                self.flight.remove(i)
            } else if let Some(i) = self
                .pool
                .iter()
                .position(|p| p.id == a.packet && a.location == Location::Relay(0))
            {
                self.pool.remove(i)
            } else {
                return invalid(format!("packet {} is not at {:?}", a.packet, a.location));
            };
            out.push(ObservationEvent {
                kind: EventKind::Drop,
                round: self.round,
                location: a.location,
                packet: packet.id,
                prev: None,
                next: None,
                is_real: Some(packet.real),
                content: packet.content,
            });
        }
        if !self.finished() {
            self.round += 1;
            let t = self.round;
            self.process(t, coins, &mut out);
            if t <= self.horizon {
                self.emit(t, coins, &mut out);
            }
        }
        self.trace.extend_from_slice(&out);
        Ok(out.into_iter().filter_map(|e| e.visible_to(&self.capability)).collect())
    }

    fn relay_output(&mut self, t: u32, relay: RelayId, p: &Packet, out: &mut Vec<ObservationEvent>) {
        if p.real {
            let id = self.fresh();
            out.push(ObservationEvent {
                kind: EventKind::Forward,
                round: t,
                location: Location::Relay(relay),
                packet: id,
                prev: Some(p.id),
                next: Some(Location::User(p.receiver)),
                is_real: Some(true),
                content: p.content,
            });
            out.push(ObservationEvent {
                kind: EventKind::Deliver,
                round: t,
                location: Location::User(p.receiver),
                packet: id,
                prev: None,
                next: None,
                is_real: Some(true),
                content: p.content,
            });
        } else {
            out.push(ObservationEvent {
                kind: EventKind::Drop,
                round: t,
                location: Location::Relay(relay),
                packet: p.id,
                prev: None,
                next: None,
                is_real: Some(false),
                content: Content::Empty,
            });
        }
    }

    fn process(&mut self, t: u32, coins: &mut dyn Coins, out: &mut Vec<ObservationEvent>) {
        let mut keep = Vec::with_capacity(self.flight.len());
        for mut p in std::mem::take(&mut self.flight) {
            if p.due != t {
                keep.push(p);
                continue;
            }
            let relay = p.hops[p.hop];
            if p.hop + 1 < p.hops.len() {
                let id = self.fresh();
                out.push(ObservationEvent {
                    kind: EventKind::Forward,
                    round: t,
                    location: Location::Relay(relay),
                    packet: id,
                    prev: Some(p.id),
                    next: Some(Location::Relay(p.hops[p.hop + 1])),
                    is_real: Some(p.real),
                    content: p.content,
                });
                p.id = id;
                p.hop += 1;
                p.due = t + 1;
                keep.push(p);
            } else {
                self.relay_output(t, relay, &p, out);
            }
        }
        self.flight = keep;

        if self.protocol.kind == ProtocolKind::ThresholdMix
            && !self.pool.is_empty()
            && self.pool.len() >= self.protocol.params.threshold as usize
        {
            let mut pool = std::mem::take(&mut self.pool);
            for i in (1..pool.len()).rev() {
                let j = coins.uniform(i + 1);
                pool.swap(i, j);
            }
            for p in &pool {
                self.relay_output(t, 0, p, out);
            }
        }
    }

    fn route(&self, coins: &mut dyn Coins) -> Vec<RelayId> {
        let p = &self.protocol.params;
        let h = match self.protocol.kind {
            ProtocolKind::TrilemmaSync | ProtocolKind::TrilemmaUnsync => {
                if p.l_max <= 1 {
                    0
                } else {
                    1 + coins.uniform(p.l_max as usize - 1)
                }
            }
            ProtocolKind::OnionPath => {
                let lo = p.l_exp.floor();
                let frac = p.l_exp - lo;
                let latency = lo as usize + (frac > 1e-12 && coins.bernoulli(frac)) as usize;
                latency - 1
            }
            _ => 1,
        };
        distinct(coins, p.k, h)
    }

    #[allow(clippy::too_many_arguments)]
    fn send(
        &mut self,
        t: u32,
        u: UserId,
        real: bool,
        content: Content,
        receiver: UserId,
        hops: Vec<RelayId>,
        out: &mut Vec<ObservationEvent>,
    ) {
        let id = self.fresh();
        let next = match self.protocol.kind {
            ProtocolKind::DcnetRound | ProtocolKind::DcnetScheduled => Location::Broadcast,
            ProtocolKind::ThresholdMix | ProtocolKind::BroadcastFullDummy => Location::Relay(0),
            _ => hops.first().map_or(Location::User(receiver), |&r| Location::Relay(r)),
        };
        out.push(ObservationEvent {
            kind: EventKind::Send,
            round: t,
            location: Location::User(u),
            packet: id,
            prev: None,
            next: Some(next),
            is_real: Some(real),
            content,
        });
        let packet = Packet {
            id,
            origin: u,
            real,
            content,
            receiver,
            hops,
            hop: 0,
            due: t + 1,
            sent: t,
        };
        match self.protocol.kind {
            ProtocolKind::DcnetRound | ProtocolKind::DcnetScheduled => {}
            ProtocolKind::ThresholdMix => self.pool.push(Packet { hops: vec![0], ..packet }),
            ProtocolKind::BroadcastFullDummy => self.relay_output(t, 0, &packet, out),
            _ if packet.hops.is_empty() => {
                let kind = if real { EventKind::Deliver } else { EventKind::Drop };
                out.push(ObservationEvent {
                    kind,
                    round: t,
                    location: Location::User(receiver),
                    packet: id,
                    prev: None,
                    next: None,
                    is_real: Some(real),
                    content,
                });
            }
            _ => self.flight.push(packet),
        }
    }

    fn background_message(&mut self, u: UserId) -> (Content, UserId) {
        self.background += 1;
        let content = Content::Message { message: BACKGROUND_BASE + self.background, aux: 0 };
        (content, (u + 1) % self.protocol.params.n)
    }

    fn send_row(&mut self, t: u32, c: Communication, coins: &mut dyn Coins, out: &mut Vec<ObservationEvent>) {
        let Communication::Send { sender, receiver, message, aux } = c else {
            return;
        };
        let content = Content::Message { message, aux };
        if self.protocol.kind == ProtocolKind::DroppingModel {
            let p = &self.protocol.params;
            for r in distinct(coins, p.k, p.copies as usize) {
                self.send(t, sender, true, content, receiver, vec![r], out);
            }
        } else {
            let hops = self.route(coins);
            self.send(t, sender, true, content, receiver, hops, out);
        }
    }

    fn send_background(&mut self, t: u32, u: UserId, coins: &mut dyn Coins, out: &mut Vec<ObservationEvent>) {
        let (content, receiver) = self.background_message(u);
        let hops = self.route(coins);
        self.send(t, u, true, content, receiver, hops, out);
    }

    fn send_dummy(&mut self, t: u32, u: UserId, coins: &mut dyn Coins, out: &mut Vec<ObservationEvent>) {
        let receiver = (u + 1) % self.protocol.params.n;
        let hops = self.route(coins);
        self.send(t, u, false, Content::Empty, receiver, hops, out);
    }

    fn emit(&mut self, t: u32, coins: &mut dyn Coins, out: &mut Vec<ObservationEvent>) {
        let p = self.protocol.params.clone();
        let n = p.n;
        let row = self.schedule.get(&t).copied();
        let row_sender = row.and_then(|c| c.sender());
        match self.protocol.kind {
            ProtocolKind::TrilemmaSync => {
                let real = row_sender.unwrap_or_else(|| coins.uniform(n as usize) as UserId);
                let x = p.beta * n as f64;
                let mut k = (x + 1e-9).floor() as usize;
                let frac = x - k as f64;
                if frac > 1e-9 && coins.bernoulli(frac) {
                    k += 1;
                }
                let mut others: Vec<UserId> = (0..n).filter(|&u| u != real).collect();
                k = k.min(others.len());
                for i in 0..k {
                    let j = i + coins.uniform(others.len() - i);
                    others.swap(i, j);
                }
                let mut dummies = others[..k].to_vec();
                dummies.sort_unstable();
                let mut d = dummies.into_iter().peekable();
                for u in 0..n {
                    if u == real {
                        match row {
                            Some(c) => self.send_row(t, c, coins, out),
                            None => self.send_background(t, u, coins, out),
                        }
                    } else if d.peek() == Some(&u) {
                        d.next();
                        self.send_dummy(t, u, coins, out);
                    }
                }
            }
            ProtocolKind::TrilemmaUnsync
            | ProtocolKind::OnionPath
            | ProtocolKind::ThresholdMix
            | ProtocolKind::DroppingModel => {
                let weights = [1.0 - p.p(), p.p_real, p.beta];
                for u in 0..n {
                    if Some(u) == row_sender {
                        self.send_row(t, row.expect("row present"), coins, out);
                        continue;
                    }
                    match coins.choose(&weights) {
                        1 => self.send_background(t, u, coins, out),
                        2 => self.send_dummy(t, u, coins, out),
                        _ => {}
                    }
                }
            }
            ProtocolKind::BroadcastFullDummy => {
                for u in 0..n {
                    if Some(u) == row_sender {
                        self.send_row(t, row.expect("row present"), coins, out);
                    } else {
                        self.send_dummy(t, u, coins, out);
                    }
                }
            }
            ProtocolKind::DcnetRound | ProtocolKind::DcnetScheduled => {
                let owner = (t - 1) % n;
                let mut reals: Vec<(Content, UserId)> = Vec::new();
                for u in 0..n {
                    let speaks = match self.protocol.kind {
                        ProtocolKind::DcnetRound => Some(u) != row_sender && coins.bernoulli(p.p_real),
                        _ => u == owner && row_sender.is_none() && coins.bernoulli(p.p_real),
                    };
                    let msg = if Some(u) == row_sender {
                        let c = row.expect("row present");
                        Some((
                            Content::Message {
                                message: c.message().expect("send row"),
                                aux: c.aux().expect("send row"),
                            },
                            c.receiver().expect("send row"),
                        ))
                    } else if speaks {
                        Some(self.background_message(u))
                    } else {
                        None
                    };
                    match msg {
                        Some((content, receiver)) => {
                            self.send(t, u, true, content, receiver, vec![], out);
                            reals.push((content, receiver));
                        }
                        None => self.send(t, u, false, Content::Empty, u, vec![], out),
                    }
                }
                let (is_real, content) = match reals.len() {
                    0 => (Some(false), Content::Empty),
                    1 => (Some(true), reals[0].0),
                    _ => (None, Content::Collision),
                };
                let id = self.fresh();
                out.push(ObservationEvent {
                    kind: EventKind::Deliver,
                    round: t,
                    location: Location::Broadcast,
                    packet: id,
                    prev: None,
                    next: None,
                    is_real,
                    content,
                });
            }
        }
    }
}

/// Full and filtered trace of one execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub full: ObservationTrace,
    pub view: ObservationTrace,
}

/// Runs `batch` to completion with passive observation only.
pub fn execute(
    protocol: &Protocol,
    batch: &Batch,
    capability: &AdversaryCapability,
    coins: &mut dyn Coins,
) -> Result<Execution> {
    let mut s = Session::start(protocol, batch, capability, coins)?;
    let mut view = Vec::new();
    while !s.finished() {
        view.extend(s.step(coins, &[])?);
    }
    Ok(Execution { full: s.full_trace(), view: ObservationTrace::new(view) })
}

/// Runs scenario `b` of `pair` with coins seeded by `seed` and returns the
/// adversary's view.
pub fn run_protocol(
    protocol: &Protocol,
    pair: &ScenarioPair,
    b: u8,
    capability: &AdversaryCapability,
    seed: u64,
) -> Result<ObservationTrace> {
    let mut coins = RngCoins::new(seed, 0);
    Ok(execute(protocol, pair.batch(b), capability, &mut coins)?.view)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{traffic_stats, Batch};

    fn one_row(sender: UserId) -> Batch {
        Batch::new(vec![Communication::new(sender, 1, 7)], OrderingMode::Simultaneous).unwrap()
    }

    fn omniscient(n: u32) -> AdversaryCapability {
        AdversaryCapability {
            observed_senders: (0..n).collect(),
            receiver_corrupted: true,
            c_p: 0,
            ..Default::default()
        }
    }

    fn count(trace: &ObservationTrace, kind: EventKind) -> usize {
        trace.events().iter().filter(|e| e.kind == kind).count()
    }

    #[test]
    fn broadcast_sends_every_round() {
        let proto = Protocol::new(
            ProtocolKind::BroadcastFullDummy,
            ProtocolParams::new(4, 1).with_rounds(3),
        )
        .unwrap();
        let ex = execute(&proto, &one_row(0), &omniscient(4), &mut RngCoins::new(1, 0)).unwrap();
        assert_eq!(count(&ex.full, EventKind::Send), 12);
        assert_eq!(count(&ex.full, EventKind::Deliver), 1);
    }

    #[test]
    fn threshold_mix_flushes_together() {
        let proto = Protocol::new(
            ProtocolKind::ThresholdMix,
            ProtocolParams::new(3, 1).with_threshold(3),
        )
        .unwrap();
        let batch = Batch::new(
            vec![Communication::new(0, 2, 1), Communication::new(1, 2, 2), Communication::new(2, 0, 3)],
            OrderingMode::Simultaneous,
        )
        .unwrap();
        let ex = execute(&proto, &batch, &omniscient(3), &mut RngCoins::new(1, 0)).unwrap();
        let sends: Vec<u32> = ex.full.events().iter().filter(|e| e.kind == EventKind::Send).map(|e| e.round).collect();
        assert_eq!(sends, vec![1, 2, 3]);
        let rounds: Vec<u32> = ex.full.events().iter().filter(|e| e.kind == EventKind::Deliver).map(|e| e.round).collect();
        assert_eq!(rounds, vec![4, 4, 4]);
        let short = Protocol::new(ProtocolKind::ThresholdMix, ProtocolParams::new(3, 1).with_threshold(5)).unwrap();
        assert!(matches!(
            execute(&short, &batch, &omniscient(3), &mut RngCoins::new(1, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn runs_are_deterministic_in_seed() {
        let proto = Protocol::new(
            ProtocolKind::TrilemmaUnsync,
            ProtocolParams::new(5, 3).with_beta(0.2).with_p_real(0.1).with_rounds(6),
        )
        .unwrap();
        let a = execute(&proto, &one_row(2), &omniscient(5), &mut RngCoins::new(3, 0)).unwrap();
        let b = execute(&proto, &one_row(2), &omniscient(5), &mut RngCoins::new(3, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sync_sends_one_real_per_round() {
        let proto = Protocol::new(
            ProtocolKind::TrilemmaSync,
            ProtocolParams::new(6, 3).with_beta(0.3).with_rounds(8),
        )
        .unwrap();
        let ex = execute(&proto, &one_row(0), &omniscient(6), &mut RngCoins::new(8, 0)).unwrap();
        for t in 1..=8 {
            let real = ex.full.events().iter().filter(|e| e.kind == EventKind::Send && e.round == t && e.is_real == Some(true)).count();
            assert_eq!(real, 1, "round {t}");
        }
    }

    #[test]
    fn dropping_only_copy_hides_delivery() {
        let params = ProtocolParams::new(2, 2).with_k(2).with_copies(1);
        let proto = Protocol::new(ProtocolKind::DroppingModel, params).unwrap();
        let cap = AdversaryCapability {
            observed_senders: [0].into(),
            receiver_corrupted: true,
            active_drop: true,
            knows_expected_reception: true,
            ..Default::default()
        };
        let mut coins = RngCoins::new(0, 0);
        let mut s = Session::start(&proto, &one_row(0), &cap, &mut coins).unwrap();
        let mut actions = Vec::new();
        let mut seen = Vec::new();
        while !s.finished() {
            let obs = s.step(&mut coins, &actions).unwrap();
            actions = obs
                .iter()
                .filter(|e| e.kind == EventKind::Send && e.location == Location::User(0))
                .map(|e| DropAction { packet: e.packet, location: Location::Link(0) })
                .collect();
            seen.extend(obs);
        }
        assert!(!seen.iter().any(|e| e.kind == EventKind::Deliver));
        assert_eq!(s.full_trace().events().iter().filter(|e| e.kind == EventKind::Drop).count(), 1);
    }

    #[test]
    fn surviving_copy_still_arrives() {
        let params = ProtocolParams::new(2, 2).with_k(2).with_copies(2);
        let proto = Protocol::new(ProtocolKind::DroppingModel, params).unwrap();
        let cap = AdversaryCapability {
            receiver_corrupted: true,
            active_drop: true,
            c_a: 1,
            ..Default::default()
        };
        let mut coins = RngCoins::new(0, 0);
        let mut s = Session::start(&proto, &one_row(0), &cap, &mut coins).unwrap();
        let obs = s.step(&mut coins, &[]).unwrap();
        let via0 = obs
            .iter()
            .find(|e| e.kind == EventKind::Send && e.next == Some(Location::Relay(0)))
            .unwrap();
        s.step(&mut coins, &[DropAction { packet: via0.packet, location: Location::Relay(0) }]).unwrap();
        while !s.finished() {
            s.step(&mut coins, &[]).unwrap();
        }
        let delivered = s.full_trace().events().iter().filter(|e| e.kind == EventKind::Deliver).count();
        assert_eq!(delivered, 1);
    }

    #[test]
    fn uncontrolled_drop_is_rejected() {
        let params = ProtocolParams::new(2, 2).with_k(3);
        let proto = Protocol::new(ProtocolKind::DroppingModel, params).unwrap();
        let cap = AdversaryCapability { active_drop: true, c_a: 1, ..Default::default() };
        let mut coins = RngCoins::new(0, 0);
        let mut s = Session::start(&proto, &one_row(0), &cap, &mut coins).unwrap();
        s.step(&mut coins, &[]).unwrap();
        let r = s.step(&mut coins, &[DropAction { packet: 1, location: Location::Relay(2) }]);
        assert!(matches!(r, Err(Error::CapabilityViolation(_))));
    }

    #[test]
    fn dcnet_collides_and_scheduler_avoids_it() {
        let params = ProtocolParams::new(4, 1).with_p_real(1.0).with_rounds(4);
        let collide = Protocol::new(ProtocolKind::DcnetRound, params.clone()).unwrap();
        let ex = execute(&collide, &one_row(0), &omniscient(4), &mut RngCoins::new(0, 0)).unwrap();
        let outs: Vec<&ObservationEvent> = ex.full.events().iter().filter(|e| e.kind == EventKind::Deliver).collect();
        assert_eq!(outs.len(), 4);
        assert!(outs.iter().all(|e| e.content == Content::Collision));
        let sched = Protocol::new(ProtocolKind::DcnetScheduled, params).unwrap();
        let ex = execute(&sched, &one_row(0), &omniscient(4), &mut RngCoins::new(0, 0)).unwrap();
        let outs: Vec<&ObservationEvent> = ex.full.events().iter().filter(|e| e.kind == EventKind::Deliver).collect();
        assert_eq!(outs.len(), 4);
        assert!(outs.iter().all(|e| matches!(e.content, Content::Message { .. })));
        assert_eq!(traffic_stats(&ex.full, &ProtocolParams::new(4, 1).with_rounds(4)).com, 16);
    }

    #[test]
    fn parameter_checks() {
        assert!(matches!(
            Protocol::new(ProtocolKind::TrilemmaUnsync, ProtocolParams::new(3, 4).with_k(2)),
            Err(Error::Config(_))
        ));
        assert!(Protocol::new(ProtocolKind::DroppingModel, ProtocolParams::new(3, 2).with_k(1).with_copies(2)).is_err());
        assert!(Protocol::new(ProtocolKind::OnionPath, ProtocolParams::new(3, 3).with_l_exp(0.5)).is_err());
        for k in ProtocolKind::ALL {
            assert_eq!(k.name().parse::<ProtocolKind>().unwrap(), k);
        }
    }
}
