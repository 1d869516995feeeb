//! Privacy notions as validity predicates on batch pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coins::{Coins, RngCoins};
use crate::error::{invalid, Error, Result};
use crate::model::{Batch, Communication, OrderingMode, ProtocolParams, UserId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NotionKind {
    /// Any two batches.
    CO,
    /// Only receivers differ.
    RO,
    /// Only senders differ.
    SO,
    /// Only senders differ and nobody sends more than `n_max` rows.
    SONmax(u32),
    /// Only senders differ and the sending-frequency multisets agree.
    SML,
    /// The senders of exactly two rows are swapped.
    SMLPair,
    /// The receivers of exactly two rows carrying the same message are swapped.
    SRLPair,
    /// Frequencies of senders and of receivers agree; no empty rows.
    MOML,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Notion {
    pub kind: NotionKind,
    /// Every user takes part exactly once (as sender, receiver or both,
    /// depending on the kind).
    pub x1: bool,
    /// Corrupted users whose rows must carry equal messages in both batches.
    pub corrupted: Option<BTreeSet<UserId>>,
}

impl Notion {
    pub fn new(kind: NotionKind) -> Self {
        Notion { kind, x1: false, corrupted: None }
    }

    pub fn with_x1(mut self) -> Self {
        self.x1 = true;
        self
    }

    pub fn with_corrupted(mut self, users: impl IntoIterator<Item = UserId>) -> Self {
        self.corrupted = Some(users.into_iter().collect());
        self
    }

    fn x1_senders(&self) -> bool {
        !matches!(self.kind, NotionKind::RO)
    }

    fn x1_receivers(&self) -> bool {
        matches!(
            self.kind,
            NotionKind::RO | NotionKind::CO | NotionKind::SRLPair | NotionKind::MOML
        )
    }

    pub fn validate(&self) -> Result<()> {
        if let NotionKind::SONmax(0) = self.kind {
            return invalid("n_max must be at least 1");
        }
        Ok(())
    }
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NotionKind::CO => write!(f, "CO")?,
            NotionKind::RO => write!(f, "RO")?,
            NotionKind::SO => write!(f, "SO")?,
            NotionKind::SONmax(k) => write!(f, "SO_nmax:{k}")?,
            NotionKind::SML => write!(f, "SML")?,
            NotionKind::SMLPair => write!(f, "(SM)L")?,
            NotionKind::SRLPair => write!(f, "(SR)L")?,
            NotionKind::MOML => write!(f, "MO[ML]")?,
        }
        if self.x1 {
            write!(f, "_1")?;
        }
        if let Some(c) = &self.corrupted {
            write!(f, "_ce")?;
            if !c.is_empty() {
                let ids: Vec<String> = c.iter().map(|u| u.to_string()).collect();
                write!(f, ":{}", ids.join(","))?;
            }
        }
        Ok(())
    }
}

impl FromStr for Notion {
    type Err = Error;

    /// Parses names such as `SO`, `SO_nmax:2`, `(SM)L_1`, `(SR)L_1_ce:0,3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown notion '{s}'"));
        let (kind, mut rest) = if let Some(r) = s.strip_prefix("SO_nmax:") {
            let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
            let k: u32 = r[..end].parse().map_err(|_| bad())?;
            (NotionKind::SONmax(k), &r[end..])
        } else {
            const BASES: [(&str, NotionKind); 7] = [
                ("MO[ML]", NotionKind::MOML),
                ("(SM)L", NotionKind::SMLPair),
                ("(SR)L", NotionKind::SRLPair),
                ("SML", NotionKind::SML),
                ("CO", NotionKind::CO),
                ("RO", NotionKind::RO),
                ("SO", NotionKind::SO),
            ];
            let (name, kind) = BASES
                .iter()
                .find(|(name, _)| s.starts_with(name))
                .ok_or_else(bad)?;
            (*kind, &s[name.len()..])
        };
        let mut n = Notion::new(kind);
        if let Some(r) = rest.strip_prefix("_1") {
            n.x1 = true;
            rest = r;
        }
        if let Some(r) = rest.strip_prefix("_ce") {
            let mut set = BTreeSet::new();
            if let Some(list) = r.strip_prefix(':') {
                for part in list.split(',').filter(|p| !p.is_empty()) {
                    set.insert(part.parse().map_err(|_| bad())?);
                }
            } else if !r.is_empty() {
                return Err(bad());
            }
            n.corrupted = Some(set);
            rest = "";
        }
        if !rest.is_empty() {
            return Err(bad());
        }
        n.validate()?;
        Ok(n)
    }
}

/// A challenge: two batches that satisfy `notion`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioPair {
    pub batch0: Batch,
    pub batch1: Batch,
    pub notion: Notion,
}

impl ScenarioPair {
    pub fn new(notion: Notion, batch0: Batch, batch1: Batch) -> Result<Self> {
        if !is_valid_pair(&notion, &batch0, &batch1) {
            return invalid(format!("batches do not form a valid {notion} pair"));
        }
        Ok(ScenarioPair { batch0, batch1, notion })
    }

    pub fn batch(&self, b: u8) -> &Batch {
        if b == 0 {
            &self.batch0
        } else {
            &self.batch1
        }
    }
}

fn frequency_multiset(counts: BTreeMap<UserId, usize>) -> Vec<usize> {
    let mut v: Vec<usize> = counts.into_values().collect();
    v.sort_unstable();
    v
}

fn same_except(
    a: &Communication,
    b: &Communication,
    sender: bool,
    receiver: bool,
) -> bool {
    match (a, b) {
        (Communication::Empty, Communication::Empty) => true,
        (
            Communication::Send { sender: s0, receiver: r0, message: m0, aux: x0 },
            Communication::Send { sender: s1, receiver: r1, message: m1, aux: x1 },
        ) => (sender || s0 == s1) && (receiver || r0 == r1) && m0 == m1 && x0 == x1,
        _ => false,
    }
}

fn differing(b0: &Batch, b1: &Batch) -> Vec<usize> {
    (0..b0.len()).filter(|&j| b0.comms()[j] != b1.comms()[j]).collect()
}

fn swap_pattern(b0: &Batch, b1: &Batch, senders: bool) -> bool {
    let d = differing(b0, b1);
    if d.len() != 2 {
        return false;
    }
    let (j, k) = (d[0], d[1]);
    let (x, y) = (b0.comms()[j], b0.comms()[k]);
    let (
        Communication::Send { sender: sj, receiver: rj, message: mj, aux: aj },
        Communication::Send { sender: sk, receiver: rk, message: mk, aux: ak },
    ) = (x, y)
    else {
        return false;
    };
    let (want_j, want_k) = if senders {
        if sj == sk {
            return false;
        }
        (
            Communication::with_aux(sk, rj, mj, aj),
            Communication::with_aux(sj, rk, mk, ak),
        )
    } else {
        if rj == rk || mj != mk || aj != ak {
            return false;
        }
        (
            Communication::with_aux(sj, rk, mj, aj),
            Communication::with_aux(sk, rj, mk, ak),
        )
    };
    b1.comms()[j] == want_j && b1.comms()[k] == want_k
}

fn pattern_holds(kind: NotionKind, b0: &Batch, b1: &Batch) -> bool {
    if kind == NotionKind::CO {
        return true;
    }
    if b0.len() != b1.len() {
        return false;
    }
    let rows = || b0.comms().iter().zip(b1.comms());
    match kind {
        NotionKind::CO => true,
        NotionKind::RO => rows().all(|(a, b)| same_except(a, b, false, true)),
        NotionKind::SO => rows().all(|(a, b)| same_except(a, b, true, false)),
        NotionKind::SONmax(k) => {
            rows().all(|(a, b)| same_except(a, b, true, false))
                && [b0, b1]
                    .iter()
                    .all(|b| b.sender_counts().values().all(|&c| c <= k as usize))
        }
        NotionKind::SML => {
            rows().all(|(a, b)| same_except(a, b, true, false))
                && frequency_multiset(b0.sender_counts()) == frequency_multiset(b1.sender_counts())
        }
        NotionKind::SMLPair => swap_pattern(b0, b1, true),
        NotionKind::SRLPair => swap_pattern(b0, b1, false),
        NotionKind::MOML => {
            !rows().any(|(a, b)| a.is_empty() || b.is_empty())
                && frequency_multiset(b0.sender_counts()) == frequency_multiset(b1.sender_counts())
                && frequency_multiset(b0.receiver_counts())
                    == frequency_multiset(b1.receiver_counts())
        }
    }
}

fn once_each(b: &Batch, senders: bool, receivers: bool) -> bool {
    if b.comms().iter().any(|c| c.is_empty()) {
        return false;
    }
    (!senders || b.sender_counts().values().all(|&c| c == 1))
        && (!receivers || b.receiver_counts().values().all(|&c| c == 1))
}

fn corruption_holds(corrupted: &BTreeSet<UserId>, b0: &Batch, b1: &Batch) -> bool {
    let touches = |c: &Communication| {
        c.sender().is_some_and(|u| corrupted.contains(&u))
            || c.receiver().is_some_and(|u| corrupted.contains(&u))
    };
    let longest = b0.len().max(b1.len());
    (0..longest).all(|j| match (b0.get(j), b1.get(j)) {
        (Some(a), Some(b)) => !(touches(a) || touches(b)) || a.message() == b.message(),
        (Some(c), None) | (None, Some(c)) => !touches(c),
        (None, None) => true,
    })
}

/// Whether `(b0, b1)` satisfies `notion`, index by index.
pub fn is_valid_pair(notion: &Notion, b0: &Batch, b1: &Batch) -> bool {
    if notion.validate().is_err() || !pattern_holds(notion.kind, b0, b1) {
        return false;
    }
    if notion.x1 {
        let (s, r) = (notion.x1_senders(), notion.x1_receivers());
        if !once_each(b0, s, r) || !once_each(b1, s, r) {
            return false;
        }
    }
    if let Some(c) = &notion.corrupted {
        if !corruption_holds(c, b0, b1) {
            return false;
        }
    }
    true
}

/// Number of rows that differ between equally long batches.
pub fn count_challenge_rows(b0: &Batch, b1: &Batch) -> Result<usize> {
    if b0.len() != b1.len() {
        return invalid(format!("batch lengths differ: {} vs {}", b0.len(), b1.len()));
    }
    Ok(differing(b0, b1).len())
}

const MAX_REINDEX_LEN: usize = 8;

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// The lexicographically smallest reordering of `b1` under which the pair is
/// valid for `notion`, or `None` if no reordering works.
pub fn canonical_reindex(notion: &Notion, b0: &Batch, b1: &Batch) -> Result<Option<Vec<usize>>> {
    if b1.len() > MAX_REINDEX_LEN {
        return Err(Error::ResourceLimit(format!(
            "reindexing is limited to {MAX_REINDEX_LEN} rows"
        )));
    }
    let mut perm: Vec<usize> = (0..b1.len()).collect();
    loop {
        if is_valid_pair(notion, b0, &b1.permuted(&perm)) {
            return Ok(Some(perm));
        }
        if !next_permutation(&mut perm) {
            return Ok(None);
        }
    }
}

/// Bounds of the universe enumerated by [`hierarchy_subset_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Universe {
    pub users: u32,
    pub messages: u32,
    pub max_len: usize,
}

const MAX_UNIVERSE_PAIRS: u128 = 50_000_000;

fn all_batches(u: &Universe) -> Vec<Batch> {
    let mut alphabet = Vec::new();
    for s in 0..u.users {
        for r in 0..u.users {
            for m in 0..u.messages {
                alphabet.push(Communication::new(s, r, m));
            }
        }
    }
    alphabet.push(Communication::Empty);
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Communication>> = vec![vec![]];
    for _ in 0..u.max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for prefix in &layer {
            for c in &alphabet {
                let mut v = prefix.clone();
                v.push(*c);
                next.push(v);
            }
        }
        for v in &next {
            out.push(Batch::new(v.clone(), OrderingMode::Simultaneous).expect("nonempty"));
        }
        layer = next;
    }
    out
}

/// True iff every pair valid for `weaker` becomes valid for `stronger` after
/// canonical reindexing of the second batch, over all batches of the universe.
pub fn hierarchy_subset_check(weaker: &Notion, stronger: &Notion, universe: Universe) -> Result<bool> {
    if universe.users > 4 || universe.messages > 3 || universe.max_len > 3 {
        return Err(Error::ResourceLimit(
            "universe limited to 4 users, 3 messages and batches of 3 rows".into(),
        ));
    }
    let alphabet = (universe.users * universe.users * universe.messages + 1) as u128;
    let batches: u128 = (1..=universe.max_len as u32).map(|l| alphabet.pow(l)).sum();
    if batches * batches > MAX_UNIVERSE_PAIRS {
        return Err(Error::ResourceLimit(format!(
            "{} pairs exceed the enumeration limit",
            batches * batches
        )));
    }
    let all = all_batches(&universe);
    for b0 in &all {
        for b1 in &all {
            if is_valid_pair(weaker, b0, b1) && canonical_reindex(stronger, b0, b1)?.is_none() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn default_len(notion: &Notion, n: u32) -> usize {
    if notion.x1 {
        n as usize
    } else {
        match notion.kind {
            NotionKind::SMLPair | NotionKind::SRLPair => 2,
            _ => 1,
        }
    }
}

/// A random valid pair for `notion` over users `0..params.n`, deterministic in `seed`.
pub fn generate_pair(notion: &Notion, params: &ProtocolParams, seed: u64) -> Result<ScenarioPair> {
    generate_pair_with_len(notion, params, default_len(notion, params.n), seed)
}

fn permutation(c: &mut dyn Coins, n: usize) -> Vec<UserId> {
    let mut v: Vec<UserId> = (0..n as UserId).collect();
    for i in (1..n).rev() {
        let j = c.uniform(i + 1);
        v.swap(i, j);
    }
    v
}

fn draw_senders(c: &mut dyn Coins, notion: &Notion, n: u32, len: usize) -> Vec<UserId> {
    if notion.x1 && notion.x1_senders() {
        return permutation(c, n as usize);
    }
    let cap = match notion.kind {
        NotionKind::SONmax(k) => k as usize,
        _ => usize::MAX,
    };
    let mut counts = vec![0usize; n as usize];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let open: Vec<UserId> = (0..n).filter(|&u| counts[u as usize] < cap).collect();
        let u = open[c.uniform(open.len())];
        counts[u as usize] += 1;
        out.push(u);
    }
    out
}

fn draw_receivers(c: &mut dyn Coins, notion: &Notion, n: u32, len: usize) -> Vec<UserId> {
    if notion.x1 && notion.x1_receivers() {
        return permutation(c, n as usize);
    }
    (0..len).map(|_| c.uniform(n as usize) as UserId).collect()
}

fn rows(senders: &[UserId], receivers: &[UserId], messages: &[u32]) -> Vec<Communication> {
    senders
        .iter()
        .zip(receivers)
        .zip(messages)
        .map(|((&s, &r), &m)| Communication::new(s, r, m))
        .collect()
}

/// As [`generate_pair`] with an explicit batch length.
pub fn generate_pair_with_len(
    notion: &Notion,
    params: &ProtocolParams,
    len: usize,
    seed: u64,
) -> Result<ScenarioPair> {
    notion.validate()?;
    let n = params.n;
    if n < 2 {
        return invalid("pairs need at least two users");
    }
    if len == 0 {
        return invalid("pairs need at least one row");
    }
    if notion.x1 && len != n as usize {
        return invalid(format!("{notion} needs exactly n = {n} rows, got {len}"));
    }
    if matches!(notion.kind, NotionKind::SMLPair | NotionKind::SRLPair) && len < 2 {
        return invalid(format!("{notion} needs at least two rows"));
    }
    if let NotionKind::SONmax(k) = notion.kind {
        if len > (k as usize) * n as usize {
            return invalid(format!("{len} rows cannot respect n_max = {k} with {n} users"));
        }
    }
    let mut c = RngCoins::new(seed, 0);
    let c: &mut dyn Coins = &mut c;
    let mut senders = draw_senders(c, notion, n, len);
    let mut receivers = draw_receivers(c, notion, n, len);
    let mut messages: Vec<u32> = (0..len as u32).collect();
    let free_senders = !(notion.x1 && notion.x1_senders());
    let free_receivers = !(notion.x1 && notion.x1_receivers());

    match notion.kind {
        NotionKind::SMLPair if free_senders && senders[0] == senders[1] => {
            senders[1] = (senders[0] + 1 + c.uniform(n as usize - 1) as u32) % n;
        }
        NotionKind::SRLPair => {
            if free_receivers && receivers[0] == receivers[1] {
                receivers[1] = (receivers[0] + 1 + c.uniform(n as usize - 1) as u32) % n;
            }
            messages[1] = messages[0];
        }
        _ => {}
    }
    let b0 = rows(&senders, &receivers, &messages);

    let mut b1 = match notion.kind {
        NotionKind::CO => {
            let s = draw_senders(c, notion, n, len);
            let r = draw_receivers(c, notion, n, len);
            let m: Vec<u32> = (0..len).map(|_| c.uniform(len + 1) as u32).collect();
            rows(&s, &r, &m)
        }
        NotionKind::SO | NotionKind::SONmax(_) => {
            let mut s = draw_senders(c, notion, n, len);
            for _ in 0..64 {
                if s != senders {
                    break;
                }
                s = draw_senders(c, notion, n, len);
            }
            if s == senders && len == 1 {
                s[0] = (senders[0] + 1) % n;
            }
            rows(&s, &receivers, &messages)
        }
        NotionKind::SML => {
            let mut sigma = permutation(c, n as usize);
            if sigma.iter().enumerate().all(|(i, &u)| i as u32 == u) {
                sigma.rotate_left(1);
            }
            let s: Vec<UserId> = senders.iter().map(|&u| sigma[u as usize]).collect();
            rows(&s, &receivers, &messages)
        }
        NotionKind::RO => {
            let mut r = draw_receivers(c, notion, n, len);
            for _ in 0..64 {
                if r != receivers {
                    break;
                }
                r = draw_receivers(c, notion, n, len);
            }
            if r == receivers && len == 1 {
                r[0] = (receivers[0] + 1) % n;
            }
            rows(&senders, &r, &messages)
        }
        NotionKind::SMLPair => {
            let k = (1..len).find(|&k| senders[k] != senders[0]).ok_or_else(|| {
                Error::InvalidInput("no two rows with distinct senders".into())
            })?;
            let mut s = senders.clone();
            s.swap(0, k);
            rows(&s, &receivers, &messages)
        }
        NotionKind::SRLPair => {
            let k = (1..len)
                .find(|&k| receivers[k] != receivers[0] && messages[k] == messages[0])
                .ok_or_else(|| Error::InvalidInput("no two rows with distinct receivers".into()))?;
            let mut r = receivers.clone();
            r.swap(0, k);
            rows(&senders, &r, &messages)
        }
        NotionKind::MOML => {
            let ps = permutation(c, len);
            let pr = permutation(c, len);
            let s: Vec<UserId> = ps.iter().map(|&i| senders[i as usize]).collect();
            let r: Vec<UserId> = pr.iter().map(|&i| receivers[i as usize]).collect();
            let m: Vec<u32> = (0..len as u32).map(|j| len as u32 + j).collect();
            rows(&s, &r, &m)
        }
    };

    if let Some(corrupted) = &notion.corrupted {
        for j in 0..len {
            let touches = |x: &Communication| {
                x.sender().is_some_and(|u| corrupted.contains(&u))
                    || x.receiver().is_some_and(|u| corrupted.contains(&u))
            };
            if touches(&b0[j]) || touches(&b1[j]) {
                if let (Communication::Send { sender, receiver, aux, .. }, Some(m)) =
                    (b1[j], b0[j].message())
                {
                    b1[j] = Communication::with_aux(sender, receiver, m, aux);
                }
            }
        }
    }

    let mode = OrderingMode::RandomPermutation;
    let pair = ScenarioPair {
        batch0: Batch::new(b0, mode)?,
        batch1: Batch::new(b1, mode)?,
        notion: notion.clone(),
    };
    if !is_valid_pair(notion, &pair.batch0, &pair.batch1) {
        return Err(Error::InvalidInput(format!(
            "could not satisfy {notion} with {len} rows over {n} users"
        )));
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: UserId = 0;
    const B: UserId = 1;
    const R: UserId = 2;

    fn batch(rows: &[(UserId, UserId, u32)]) -> Batch {
        Batch::new(
            rows.iter().map(|&(s, r, m)| Communication::new(s, r, m)).collect(),
            OrderingMode::Simultaneous,
        )
        .unwrap()
    }

    fn notion(s: &str) -> Notion {
        s.parse().unwrap()
    }

    #[test]
    fn sender_swap_examples() {
        let b0 = batch(&[(A, R, 1), (B, R, 2)]);
        let b1 = batch(&[(B, R, 1), (A, R, 2)]);
        assert!(is_valid_pair(&notion("SO"), &b0, &b1));
        assert!(is_valid_pair(&notion("(SM)L"), &b0, &b1));
        assert!(!is_valid_pair(&notion("SO"), &batch(&[(A, R, 1)]), &batch(&[(A, R, 2)])));
        let twice = batch(&[(A, R, 1), (A, R, 2)]);
        assert!(!is_valid_pair(&notion("SO_nmax:1"), &twice, &twice));
        assert!(is_valid_pair(&notion("SO_nmax:2"), &twice, &twice));
    }

    #[test]
    fn receiver_swap_needs_equal_messages() {
        let b0 = batch(&[(A, 2, 5), (B, 3, 5)]);
        let b1 = batch(&[(A, 3, 5), (B, 2, 5)]);
        assert!(is_valid_pair(&notion("(SR)L"), &b0, &b1));
        let c0 = batch(&[(A, 2, 5), (B, 3, 6)]);
        let c1 = batch(&[(A, 3, 5), (B, 2, 6)]);
        assert!(!is_valid_pair(&notion("(SR)L"), &c0, &c1));
    }

    #[test]
    fn challenge_rows() {
        let b0 = batch(&[(A, R, 1), (B, R, 2)]);
        assert_eq!(count_challenge_rows(&b0, &b0).unwrap(), 0);
        let b1 = batch(&[(B, R, 1), (A, R, 2)]);
        assert_eq!(count_challenge_rows(&b0, &b1).unwrap(), 2);
        assert!(count_challenge_rows(&b0, &batch(&[(A, R, 1)])).is_err());
    }

    #[test]
    fn x1_and_corruption() {
        let b0 = batch(&[(A, R, 1), (B, R, 2)]);
        let b1 = batch(&[(B, R, 1), (A, R, 2)]);
        assert!(is_valid_pair(&notion("(SM)L_1"), &b0, &b1));
        let twice = batch(&[(A, R, 1), (A, R, 2)]);
        let swapped = batch(&[(B, R, 1), (B, R, 2)]);
        assert!(is_valid_pair(&notion("SO"), &twice, &swapped));
        assert!(!is_valid_pair(&notion("SO_1"), &twice, &swapped));
        let c0 = batch(&[(A, R, 1)]);
        let c1 = batch(&[(B, 3, 2)]);
        assert!(is_valid_pair(&notion("CO"), &c0, &c1));
        assert!(!is_valid_pair(&notion("CO_ce:0"), &c0, &c1));
        assert!(is_valid_pair(&notion("CO_ce:3"), &c0, &batch(&[(B, 3, 1)])));
    }

    #[test]
    fn names_round_trip() {
        for s in ["CO", "RO", "SO", "SO_nmax:3", "SML", "(SM)L_1", "(SR)L_1_ce", "MO[ML]_ce:0,2"] {
            assert_eq!(notion(s).to_string(), s);
        }
        assert!("XY".parse::<Notion>().is_err());
        assert!("SO_nmax:0".parse::<Notion>().is_err());
        assert!("SO_2".parse::<Notion>().is_err());
    }

    #[test]
    fn reindexing_finds_smallest_permutation() {
        let b0 = batch(&[(A, R, 1), (B, R, 2)]);
        let b1 = batch(&[(A, R, 2), (B, R, 1)]);
        assert!(!is_valid_pair(&notion("SO"), &b0, &b1));
        assert_eq!(canonical_reindex(&notion("SO"), &b0, &b1).unwrap(), Some(vec![1, 0]));
    }

    #[test]
    fn generated_pairs_are_valid_and_deterministic() {
        let params = ProtocolParams::new(3, 2);
        let a = generate_pair(&notion("SO"), &params, 5).unwrap();
        assert_eq!(a, generate_pair(&notion("SO"), &params, 5).unwrap());
        let two = ProtocolParams::new(2, 2);
        let p = generate_pair(&notion("(SM)L_1"), &two, 1).unwrap();
        assert_eq!(count_challenge_rows(&p.batch0, &p.batch1).unwrap(), 2);
        let p = generate_pair(&notion("(SR)L_1"), &two, 1).unwrap();
        for j in 0..2 {
            assert_eq!(p.batch0.comms()[j].sender(), p.batch1.comms()[j].sender());
            assert_eq!(p.batch0.comms()[j].message(), p.batch1.comms()[j].message());
        }
        assert_ne!(p.batch0, p.batch1);
        assert!(generate_pair_with_len(&notion("SO_1"), &params, 2, 0).is_err());
    }
}
