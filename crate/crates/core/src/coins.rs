//! Sources of randomness for protocol runs and adversary tie-breaks.
//!
//! Every random decision goes through [`Coins`], so the same protocol code can be
//! driven by a seeded generator or by [`expectation`], which walks every outcome
//! of the decision tree and weights it exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub trait Coins {
    /// Index `i` drawn with probability `weights[i] / sum(weights)`.
    fn choose(&mut self, weights: &[f64]) -> usize;

    fn bernoulli(&mut self, p: f64) -> bool {
        self.choose(&[1.0 - p, p]) == 1
    }

    /// Uniform index in `0..k`; `k` must be positive.
    fn uniform(&mut self, k: usize) -> usize;
}

/// Seeded generator.
pub struct RngCoins {
    rng: ChaCha8Rng,
}

impl RngCoins {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngCoins { rng }
    }
}

impl Coins for RngCoins {
    fn choose(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.rng.gen::<f64>() * total;
        let mut last = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
        last
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }

    fn uniform(&mut self, k: usize) -> usize {
        self.rng.gen_range(0..k)
    }
}

/// Depth-first walker over all outcomes of a deterministic program that draws
/// from [`Coins`]. Zero-probability branches are never visited.
pub struct Enumerator {
    path: Vec<(usize, usize)>,
    pos: usize,
    weight: f64,
}

impl Enumerator {
    fn new() -> Self {
        Enumerator { path: Vec::new(), pos: 0, weight: 1.0 }
    }

    fn pick(&mut self, arity: usize) -> usize {
        let idx = if self.pos < self.path.len() {
            debug_assert_eq!(self.path[self.pos].1, arity, "program is not deterministic");
            self.path[self.pos].0
        } else {
            self.path.push((0, arity));
            0
        };
        self.pos += 1;
        idx
    }

    fn advance(&mut self) -> bool {
        while let Some(last) = self.path.last_mut() {
            if last.0 + 1 < last.1 {
                last.0 += 1;
                return true;
            }
            self.path.pop();
        }
        false
    }
}

impl Coins for Enumerator {
    fn choose(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let arity = weights.iter().filter(|&&w| w > 0.0).count();
        let idx = self.pick(arity);
        let j = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .nth(idx)
            .map(|(j, _)| j)
            .expect("branch index in range");
        if arity > 1 {
            self.weight *= weights[j] / total;
        }
        j
    }

    fn uniform(&mut self, k: usize) -> usize {
        let idx = self.pick(k);
        if k > 1 {
            self.weight /= k as f64;
        }
        idx
    }
}

/// Exact expectation of `f` over every outcome of its coin draws.
///
/// Fails with a resource-limit error once more than `max_leaves` outcomes
/// have been visited.
pub fn expectation<F>(max_leaves: u64, mut f: F) -> Result<f64>
where
    F: FnMut(&mut dyn Coins) -> Result<f64>,
{
    let mut e = Enumerator::new();
    let mut sum = 0.0;
    let mut leaves = 0u64;
    loop {
        e.pos = 0;
        e.weight = 1.0;
        let v = f(&mut e)?;
        sum += e.weight * v;
        leaves += 1;
        if leaves > max_leaves {
            return Err(Error::ResourceLimit(format!(
                "outcome space exceeds {max_leaves} leaves"
            )));
        }
        if !e.advance() {
            return Ok(sum);
        }
    }
}
