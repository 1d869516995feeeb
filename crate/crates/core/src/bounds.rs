//! Closed-form lower bounds, impossibility regions and onion cost.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Binomial coefficient as a float; zero when `k > n`.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingBound {
    pub min_com: u64,
    /// Senders that sent fewer packets than were delivered.
    pub excluded: Vec<usize>,
    /// Share of `min_com` that must be dummies.
    pub overhead_fraction: f64,
}

pub fn counting_bound(out_r: u64, h: u64, sent: Option<&[u64]>) -> Result<CountingBound> {
    if h == 0 {
        return invalid("at least one honest sender is required");
    }
    let excluded = sent
        .map(|l| l.iter().enumerate().filter(|(_, &x)| x < out_r).map(|(i, _)| i).collect())
        .unwrap_or_default();
    Ok(CountingBound {
        min_com: out_r * h,
        excluded,
        overhead_fraction: (h - 1) as f64 / h as f64,
    })
}

pub fn optimality_overhead(n: u64, mu_max: u64) -> u64 {
    n * mu_max
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrilemmaSetting {
    Sync,
    UnsyncImproved,
    UnsyncOriginal,
}

impl TrilemmaSetting {
    pub fn name(&self) -> &'static str {
        match self {
            TrilemmaSetting::Sync => "sync",
            TrilemmaSetting::UnsyncImproved => "unsync-improved",
            TrilemmaSetting::UnsyncOriginal => "unsync-original",
        }
    }
}

impl fmt::Display for TrilemmaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrilemmaSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sync" | "trilemma-sync" => Ok(TrilemmaSetting::Sync),
            "unsync-improved" | "unsync" | "trilemma-unsync" => Ok(TrilemmaSetting::UnsyncImproved),
            "unsync-original" => Ok(TrilemmaSetting::UnsyncOriginal),
            _ => invalid(format!("unknown trilemma setting '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub bound: String,
    pub delta: f64,
    pub inputs: BTreeMap<String, f64>,
    pub case: String,
}

/// `min(1, x (1 + beta n) / (n - 1))`.
pub fn f_beta(x: f64, beta: f64, n: u32) -> f64 {
    (x * (1.0 + beta * n as f64) / (n as f64 - 1.0)).min(1.0)
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return invalid(format!("{name} = {v} is outside [0, 1]"));
    }
    Ok(())
}

fn check_common(setting: TrilemmaSetting, l_max: u32, beta: f64, p: f64, n: u32) -> Result<()> {
    if l_max < 1 {
        return invalid("l_max must be at least 1");
    }
    check_prob("beta", beta)?;
    check_prob("p", p)?;
    if setting == TrilemmaSetting::Sync && n < 2 {
        return invalid("the synchronized bound needs n >= 2");
    }
    Ok(())
}

fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Lower bound on the advantage of the timing attack without compromised relays.
pub fn trilemma_advantage(
    setting: TrilemmaSetting,
    l_max: u32,
    beta: f64,
    p: f64,
    n: u32,
) -> Result<BoundResult> {
    check_common(setting, l_max, beta, p, n)?;
    let m = (l_max - 1) as f64;
    let delta = match setting {
        TrilemmaSetting::Sync => 1.0 - f_beta(m, beta, n),
        TrilemmaSetting::UnsyncImproved => (1.0 - p).powi(m as i32),
        TrilemmaSetting::UnsyncOriginal => 1.0 - (0.5 + (1.0 - (1.0 - p).powi(m as i32)).min(0.5)),
    };
    Ok(BoundResult {
        bound: format!("trilemma-{setting}"),
        delta: delta.clamp(0.0, 1.0),
        inputs: inputs(&[("l_max", l_max as f64), ("beta", beta), ("p", p), ("n", n as f64)]),
        case: if l_max == 1 { "minimal latency".into() } else { "general".into() },
    })
}

/// Lower bound with `c_p` of `k` relays passively compromised.
/// `x` is `beta` in the synchronized setting and `p` otherwise.
pub fn trilemma_compromising(
    setting: TrilemmaSetting,
    l_max: u32,
    x: f64,
    n: u32,
    c_p: u32,
    k: u32,
) -> Result<BoundResult> {
    if setting == TrilemmaSetting::UnsyncOriginal {
        return invalid("the compromising bound has no original unsynchronized form");
    }
    check_common(setting, l_max, x, x, n)?;
    if c_p > k {
        return invalid(format!("c_p = {c_p} exceeds K = {k}"));
    }
    let m = l_max - 1;
    let full = c_p >= m;
    let delta = match (setting, full) {
        (TrilemmaSetting::Sync, true) => {
            1.0 - (1.0 - binomial(c_p, m) / binomial(k, m)) * f_beta(m as f64, x, n)
        }
        (TrilemmaSetting::Sync, false) => {
            1.0 - (1.0 - 1.0 / binomial(k, c_p)) * f_beta(c_p as f64, x, n)
                - f_beta((m - c_p) as f64, x, n)
        }
        (_, true) => {
            1.0 - (1.0 - binomial(c_p, m) / binomial(k, m)) * (1.0 - (1.0 - x).powi(m as i32))
        }
        (_, false) => {
            let q = 1.0 - x;
            q.powi((m - c_p) as i32)
                * (1.0 - (1.0 - q.powi(c_p as i32)) * (1.0 - 1.0 / binomial(k, c_p)))
        }
    };
    let var = if setting == TrilemmaSetting::Sync { "beta" } else { "p" };
    Ok(BoundResult {
        bound: format!("trilemma-compromising-{setting}"),
        delta: delta.clamp(0.0, 1.0),
        inputs: inputs(&[
            ("l_max", l_max as f64),
            (var, x),
            ("n", n as f64),
            ("c_p", c_p as f64),
            ("k", k as f64),
        ]),
        case: if full { "c_p >= l_max-1".into() } else { "c_p < l_max-1".into() },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Counting,
    Trilemma,
    Dropping,
}

impl BoundKind {
    pub const ALL: [BoundKind; 3] = [BoundKind::Counting, BoundKind::Trilemma, BoundKind::Dropping];

    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Counting => "counting",
            BoundKind::Trilemma => "trilemma",
            BoundKind::Dropping => "dropping",
        }
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown bound '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Impossible,
    Possible,
    NotApplicable,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Impossible => "impossible",
            Verdict::Possible => "possible",
            Verdict::NotApplicable => "not-applicable",
        }
    }
}

/// A parameter point to test against a bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub l_max: u32,
    /// Dummy rate; pass `p` here for the unsynchronized trilemma.
    pub beta: f64,
    pub p: f64,
    pub n: u32,
    pub c_p: u32,
    /// Delivered real messages per round, `Out(r) / r`.
    pub out_rate: f64,
    pub lambda: f64,
    pub log_base: f64,
    pub copies: Option<u32>,
    pub c_a: Option<u32>,
}

impl RegionPoint {
    pub fn new(l_max: u32, beta: f64, n: u32) -> Self {
        RegionPoint {
            l_max,
            beta,
            p: beta,
            n,
            c_p: 0,
            out_rate: 1.0,
            lambda: 256.0,
            log_base: 2.0,
            copies: None,
            c_a: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub bound: BoundKind,
    pub verdict: Verdict,
    /// Minimum `beta` (or `p` for dropping) needed to leave the impossible area.
    pub threshold: Option<f64>,
    pub poly_lambda: f64,
    pub case: String,
    pub reason: Option<String>,
}

pub fn counting_min_beta(out_rate: f64, poly: f64) -> f64 {
    out_rate * (1.0 - 1.0 / poly)
}

/// Threshold below which the trilemma bound rules out strong anonymity.
pub fn trilemma_min_beta(l_max: u32, c_p: u32, poly: f64) -> Option<f64> {
    if l_max <= 1 {
        return None;
    }
    let m = l_max - 1;
    let hops = if c_p >= m { m } else { m - c_p };
    Some((1.0 - 1.0 / poly) / (2.0 * hops as f64))
}

pub fn dropping_min_p(lambda: f64, log_base: f64, poly: f64, l_max: u32) -> f64 {
    lambda.log(log_base) / (poly * l_max as f64)
}

pub fn impossibility_region(bound: BoundKind, point: &RegionPoint, poly: f64) -> Result<RegionVerdict> {
    if poly.is_nan() || poly <= 1.0 {
        return invalid(format!("poly(lambda) must exceed 1, got {poly}"));
    }
    check_prob("beta", point.beta)?;
    check_prob("p", point.p)?;
    let verdict = |impossible: bool| if impossible { Verdict::Impossible } else { Verdict::Possible };
    let mut out = RegionVerdict {
        bound,
        verdict: Verdict::NotApplicable,
        threshold: None,
        poly_lambda: poly,
        case: String::new(),
        reason: None,
    };
    match bound {
        BoundKind::Counting => {
            let t = counting_min_beta(point.out_rate, poly);
            let full = point.p >= 1.0 - 1e-12;
            out.threshold = Some(t);
            out.verdict = verdict(!(full && point.beta >= t - 1e-12));
            out.case = if full { "p = 1".into() } else { "p < 1".into() };
        }
        BoundKind::Trilemma => match trilemma_min_beta(point.l_max, point.c_p, poly) {
            None => {
                out.case = "minimal latency".into();
                out.reason = Some("l-max-at-most-1".into());
            }
            Some(t) => {
                out.threshold = Some(t);
                out.verdict = verdict(point.beta <= t);
                let gate = if point.beta * point.n as f64 >= 1.0 { "beta*n >= 1" } else { "beta*n < 1" };
                out.case = if point.c_p >= point.l_max - 1 {
                    format!("constant latency, {gate}")
                } else {
                    gate.to_string()
                };
            }
        },
        BoundKind::Dropping => {
            if point.l_max == 0 {
                return invalid("l_max must be at least 1");
            }
            if let (Some(c_a), Some(copies)) = (point.c_a, point.copies) {
                if c_a < copies {
                    out.case = "fewer corrupted relays than copies".into();
                    out.reason = Some("c-a-below-copies".into());
                    return Ok(out);
                }
            }
            let t = dropping_min_p(point.lambda, point.log_base, poly, point.l_max);
            out.threshold = Some(t);
            out.verdict = verdict(point.p <= t);
            out.case = "translated threshold".into();
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostModel {
    Trilemma,
    Counting,
    DroppingThreshold,
}

impl FromStr for CostModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trilemma" => Ok(CostModel::Trilemma),
            "counting" => Ok(CostModel::Counting),
            "dropping" | "dropping-threshold" => Ok(CostModel::DroppingThreshold),
            _ => invalid(format!("unknown cost model '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnionCost {
    pub per_user: f64,
    pub network: f64,
    pub model: CostModel,
}

/// Expected packet transmissions per user and for the whole network. The
/// dropping figure uses `log2(lambda)`.
pub fn onion_cost(model: CostModel, n: u32, p: f64, l_exp: f64, lambda: f64) -> Result<OnionCost> {
    check_prob("p", p)?;
    if l_exp < 0.0 || lambda <= 1.0 {
        return invalid("l_exp must be non-negative and lambda above 1");
    }
    let n = n as f64;
    let per_user = match model {
        CostModel::Trilemma => n * p * l_exp,
        CostModel::Counting => n * l_exp,
        CostModel::DroppingThreshold => lambda.log2(),
    };
    Ok(OnionCost { per_user, network: n * per_user, model })
}
