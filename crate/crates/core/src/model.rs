//! Shared vocabulary: communications, batches, parameters, capabilities and
//! observation traces.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type UserId = u32;
pub type RelayId = u32;
pub type MessageId = u32;
pub type Aux = u32;

/// One row of a batch: a communication or the explicit "nothing" marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Communication {
    Send {
        sender: UserId,
        receiver: UserId,
        message: MessageId,
        aux: Aux,
    },
    Empty,
}

impl Communication {
    pub fn new(sender: UserId, receiver: UserId, message: MessageId) -> Self {
        Communication::Send { sender, receiver, message, aux: 0 }
    }

    pub fn with_aux(sender: UserId, receiver: UserId, message: MessageId, aux: Aux) -> Self {
        Communication::Send { sender, receiver, message, aux }
    }

    pub fn sender(&self) -> Option<UserId> {
        match *self {
            Communication::Send { sender, .. } => Some(sender),
            Communication::Empty => None,
        }
    }

    pub fn receiver(&self) -> Option<UserId> {
        match *self {
            Communication::Send { receiver, .. } => Some(receiver),
            Communication::Empty => None,
        }
    }

    pub fn message(&self) -> Option<MessageId> {
        match *self {
            Communication::Send { message, .. } => Some(message),
            Communication::Empty => None,
        }
    }

    pub fn aux(&self) -> Option<Aux> {
        match *self {
            Communication::Send { aux, .. } => Some(aux),
            Communication::Empty => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Communication::Empty)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingMode {
    #[default]
    Simultaneous,
    RandomPermutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Batch {
    comms: Vec<Communication>,
    mode: OrderingMode,
}

/// Builds a batch; the sequence must be nonempty.
pub fn make_batch(comms: Vec<Communication>, mode: OrderingMode) -> Result<Batch> {
    if comms.is_empty() {
        return invalid("a batch needs at least one communication");
    }
    Ok(Batch { comms, mode })
}

impl Batch {
    pub fn new(comms: Vec<Communication>, mode: OrderingMode) -> Result<Self> {
        make_batch(comms, mode)
    }

    pub fn comms(&self) -> &[Communication] {
        &self.comms
    }

    pub fn len(&self) -> usize {
        self.comms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comms.is_empty()
    }

    pub fn mode(&self) -> OrderingMode {
        self.mode
    }

    pub fn get(&self, j: usize) -> Option<&Communication> {
        self.comms.get(j)
    }

    /// Same rows reordered by `perm` (row `j` of the result is row `perm[j]`).
    pub fn permuted(&self, perm: &[usize]) -> Batch {
        Batch {
            comms: perm.iter().map(|&i| self.comms[i]).collect(),
            mode: self.mode,
        }
    }

    /// Number of rows each user sends, indexed by user id.
    pub fn sender_counts(&self) -> std::collections::BTreeMap<UserId, usize> {
        let mut m = std::collections::BTreeMap::new();
        for c in &self.comms {
            if let Some(s) = c.sender() {
                *m.entry(s).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn receiver_counts(&self) -> std::collections::BTreeMap<UserId, usize> {
        let mut m = std::collections::BTreeMap::new();
        for c in &self.comms {
            if let Some(r) = c.receiver() {
                *m.entry(r).or_insert(0) += 1;
            }
        }
        m
    }
}

/// Protocol parameters. `p` is derived as `p_real + beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n: u32,
    pub l_max: u32,
    pub l_exp: f64,
    pub beta: f64,
    pub p_real: f64,
    pub k: u32,
    pub threshold: u32,
    pub copies: u32,
    pub rounds: u32,
}

impl ProtocolParams {
    /// Defaults: no traffic besides the batch, `l_exp = l_max`, enough relays
    /// for the longest path, threshold and copies 1, one round.
    pub fn new(n: u32, l_max: u32) -> Self {
        ProtocolParams {
            n,
            l_max,
            l_exp: l_max as f64,
            beta: 0.0,
            p_real: 0.0,
            k: l_max.saturating_sub(1).max(1),
            threshold: 1,
            copies: 1,
            rounds: 1,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_p_real(mut self, p_real: f64) -> Self {
        self.p_real = p_real;
        self
    }

    /// Sets the total sending probability, keeping the current `beta`.
    pub fn with_p(mut self, p: f64) -> Self {
        self.p_real = p - self.beta;
        self
    }

    pub fn with_l_exp(mut self, l_exp: f64) -> Self {
        self.l_exp = l_exp;
        self
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn with_threshold(mut self, t: u32) -> Self {
        self.threshold = t;
        self
    }

    pub fn with_copies(mut self, copies: u32) -> Self {
        self.copies = copies;
        self
    }

    pub fn with_rounds(mut self, rounds: u32) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn p(&self) -> f64 {
        self.p_real + self.beta
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return invalid(format!("n must be at least 2, got {}", self.n));
        }
        if self.l_max < 1 {
            return invalid("l_max must be at least 1");
        }
        for (name, v) in [("beta", self.beta), ("p_real", self.p_real)] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return invalid(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.p() > 1.0 + 1e-12 {
            return invalid(format!(
                "p_real + beta = {} exceeds 1",
                self.p_real + self.beta
            ));
        }
        if self.l_exp.is_nan() || self.l_exp > self.l_max as f64 {
            return invalid(format!("l_exp {} exceeds l_max {}", self.l_exp, self.l_max));
        }
        Ok(())
    }
}

/// What the adversary sees and controls.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AdversaryCapability {
    pub observed_senders: BTreeSet<UserId>,
    pub receiver_corrupted: bool,
    pub c_p: u32,
    pub c_a: u32,
    pub active_drop: bool,
    pub knows_expected_reception: bool,
    pub knows_total_real: bool,
}

impl AdversaryCapability {
    pub fn validate(&self, k: u32) -> Result<()> {
        if self.c_p > k {
            return invalid(format!("c_p = {} exceeds K = {k}", self.c_p));
        }
        if self.active_drop && self.c_a == 0 && self.observed_senders.is_empty() {
            return invalid("active dropping needs a controlled node or an observed link");
        }
        Ok(())
    }

    /// Relays `0..max(c_p, c_a)` are the compromised ones; path choice is uniform,
    /// so which ids are compromised does not matter.
    pub fn corrupt_relay(&self, r: RelayId) -> bool {
        r < self.c_p.max(self.c_a)
    }

    pub fn observes(&self, u: UserId) -> bool {
        self.observed_senders.contains(&u)
    }

    /// Whether the adversary may drop packets at `loc`.
    pub fn controls(&self, loc: Location) -> bool {
        if !self.active_drop {
            return false;
        }
        match loc {
            Location::Link(u) => self.observes(u),
            Location::Relay(r) => r < self.c_a,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Send,
    Forward,
    Deliver,
    Drop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    User(UserId),
    Relay(RelayId),
    /// The access link of a user, where an active adversary may drop.
    Link(UserId),
    /// Public superposed output.
    Broadcast,
    /// Stripped by filtering.
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Content {
    Hidden,
    Message { message: MessageId, aux: Aux },
    Empty,
    Collision,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservationEvent {
    pub kind: EventKind,
    pub round: u32,
    pub location: Location,
    pub packet: u64,
    /// Incoming packet id for a relay output.
    pub prev: Option<u64>,
    /// Node the packet is handed to.
    pub next: Option<Location>,
    pub is_real: Option<bool>,
    pub content: Content,
}

impl ObservationEvent {
    /// What `cap` sees of this event, if anything.
    pub fn visible_to(&self, cap: &AdversaryCapability) -> Option<ObservationEvent> {
        let mut e = *self;
        match (self.kind, self.location) {
            (EventKind::Send, Location::User(u)) => {
                let via_relay = matches!(self.next, Some(Location::Relay(r)) if cap.corrupt_relay(r));
                if !(cap.observes(u) || via_relay) {
                    return None;
                }
                e.is_real = None;
                e.content = Content::Hidden;
                Some(e)
            }
            (EventKind::Forward, Location::Relay(r)) => {
                if !cap.corrupt_relay(r) {
                    return None;
                }
                e.is_real = None;
                e.content = Content::Hidden;
                Some(e)
            }
            (EventKind::Deliver, Location::Broadcast) => Some(e),
            (EventKind::Deliver, _) => {
                if cap.receiver_corrupted && self.location != Location::Unknown {
                    return Some(e);
                }
                if cap.knows_total_real && self.is_real == Some(true) {
                    return Some(ObservationEvent {
                        kind: EventKind::Deliver,
                        round: self.round,
                        location: Location::Unknown,
                        packet: 0,
                        prev: None,
                        next: None,
                        is_real: Some(true),
                        content: Content::Hidden,
                    });
                }
                None
            }
            (EventKind::Drop, Location::Relay(r)) => cap.corrupt_relay(r).then_some(e),
            (EventKind::Drop, Location::User(_)) => cap.receiver_corrupted.then_some(e),
            (EventKind::Drop, Location::Link(_)) => cap.active_drop.then_some(e),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObservationTrace {
    pub events: Vec<ObservationEvent>,
}

impl ObservationTrace {
    pub fn new(events: Vec<ObservationEvent>) -> Self {
        ObservationTrace { events }
    }

    pub fn events(&self) -> &[ObservationEvent] {
        &self.events
    }

    /// The view of `cap`. Filtering twice with the same capability is the identity.
    pub fn filter(&self, cap: &AdversaryCapability) -> ObservationTrace {
        ObservationTrace {
            events: self.events.iter().filter_map(|e| e.visible_to(cap)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficStats {
    /// `L_i(r)`: send events of user `i` up to round `r`.
    pub sends: Vec<u64>,
    /// `Out(r)`: real deliveries up to round `r`.
    pub out: u64,
    /// `Com(r)`: total send events.
    pub com: u64,
}

/// Counts sends and real deliveries up to round `params.rounds`.
pub fn traffic_stats(trace: &ObservationTrace, params: &ProtocolParams) -> TrafficStats {
    let r = params.rounds;
    let mut sends = vec![0u64; params.n as usize];
    let mut out = 0;
    for e in trace.events.iter().filter(|e| e.round <= r) {
        match (e.kind, e.location) {
            (EventKind::Send, Location::User(u)) if (u as usize) < sends.len() => {
                sends[u as usize] += 1
            }
            (EventKind::Deliver, _) if e.is_real == Some(true) => out += 1,
            _ => {}
        }
    }
    let com = sends.iter().sum();
    TrafficStats { sends, out, com }
}
