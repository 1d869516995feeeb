//! Parameter points for deployed anonymity networks, their classification
//! against the three bounds, and trade-off grids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    counting_min_beta, dropping_min_p, impossibility_region, trilemma_min_beta, BoundKind,
    RegionPoint, Verdict,
};
use crate::error::{invalid, Error, Result};

/// A per-round quantity that may scale with the number of users.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Zero,
    One,
    N,
    Fraction(f64),
}

impl Scale {
    pub fn value(&self, n: u32) -> f64 {
        match self {
            Scale::Zero => 0.0,
            Scale::One => 1.0,
            Scale::N => n as f64,
            Scale::Fraction(x) => *x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcnPreset {
    pub name: String,
    /// Table row or plot label the point belongs to.
    pub row: String,
    pub n: u32,
    pub l_max: u32,
    pub beta: f64,
    pub p: f64,
    /// Dummy messages per round and user in the general case.
    pub dummies: Scale,
    /// Communications per round in the general case.
    pub comms: Scale,
    /// Every user sends in every round.
    pub always_sends: bool,
    /// Messages are combined by superposed sending rather than mixed.
    pub superposition: bool,
}

pub const PRESETS: [&str; 11] = [
    "tor",
    "hornet",
    "threshold-mix",
    "herd",
    "dcnet",
    "dissent",
    "dicemix",
    "loopix",
    "riposte",
    "riffle",
    "vuvuzela",
];

/// Looks up a named system at `n` users and security parameter `lambda`.
pub fn preset(name: &str, n: u32, lambda: f64) -> Result<AcnPreset> {
    if n < 2 || lambda <= 1.0 {
        return invalid("presets need n >= 2 and lambda > 1");
    }
    let log_n = (n as f64).log2().ceil().max(2.0) as u32;
    let base = |row: &str, l_max: u32, beta: f64, p: f64| AcnPreset {
        name: name.to_string(),
        row: row.to_string(),
        n,
        l_max,
        beta,
        p,
        dummies: Scale::Zero,
        comms: Scale::One,
        always_sends: p >= 1.0,
        superposition: false,
    };
    let superposed = |row: &str, dummies: Scale, comms: Scale| AcnPreset {
        dummies,
        comms,
        superposition: true,
        ..base(row, 1, 1.0, 1.0)
    };
    let p = match name {
        "tor" | "hornet" => base("Tor, HORNET", 3, 0.0, 0.0),
        "threshold-mix" => base("Threshold-Mix", n, 0.0, 0.0),
        "herd" => AcnPreset { dummies: Scale::One, comms: Scale::N, ..base("Herd", 2, 1.0, 1.0) },
        "dcnet" => superposed("DC-Net, Dissent", Scale::One, Scale::One),
        "dissent" => superposed("DC-Net, Dissent", Scale::One, Scale::One),
        "dicemix" => superposed("Dicemix", Scale::N, Scale::N),
        "loopix" => {
            let beta = 1.0 / lambda;
            AcnPreset {
                dummies: Scale::Fraction(beta),
                ..base("Loopix", lambda.sqrt().round() as u32 + 1, beta, beta)
            }
        }
        "riposte" => AcnPreset { comms: Scale::N, ..base("Riffle, Riposte", 2, 1.0, 1.0) },
        "riffle" => AcnPreset { comms: Scale::N, ..base("Riffle, Riposte", log_n, 1.0, 1.0) },
        "vuvuzela" => AcnPreset { dummies: Scale::One, comms: Scale::N, ..base("Vuvuzela", log_n, 1.0, 1.0) },
        _ => return Err(Error::NotFound(format!("no preset named '{name}'"))),
    };
    Ok(p)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One real message per round, `beta ≈ p`.
    #[default]
    #[serde(alias = "figure3")]
    Point,
    /// Per-round sending behavior with several communications.
    General,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point" | "figure3" => Ok(Mode::Point),
            "general" => Ok(Mode::General),
            _ => invalid(format!("unknown mode '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Meets,
    Violates,
    NotApplicable,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Meets => "meets",
            Classification::Violates => "violates",
            Classification::NotApplicable => "not-applicable",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<Verdict> for Classification {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Impossible => Classification::Violates,
            Verdict::Possible => Classification::Meets,
            Verdict::NotApplicable => Classification::NotApplicable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub bound: BoundKind,
    pub verdict: Classification,
    pub threshold: Option<f64>,
    /// Machine-readable cause of a not-applicable verdict.
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasReport {
    pub preset: String,
    pub row: String,
    pub mode: Mode,
    pub lambda: f64,
    pub poly_lambda: f64,
    pub verdicts: Vec<BoundVerdict>,
}

impl AtlasReport {
    pub fn get(&self, bound: BoundKind) -> &BoundVerdict {
        self.verdicts.iter().find(|v| v.bound == bound).expect("all bounds classified")
    }
}

fn point_of(p: &AcnPreset, lambda: f64) -> RegionPoint {
    RegionPoint { p: p.p, lambda, ..RegionPoint::new(p.l_max, p.beta, p.n) }
}

pub fn classify(p: &AcnPreset, mode: Mode, lambda: f64, poly: f64) -> Result<AtlasReport> {
    let point = point_of(p, lambda);
    let mut verdicts = Vec::new();
    for bound in BoundKind::ALL {
        if p.superposition && bound != BoundKind::Counting {
            verdicts.push(BoundVerdict {
                bound,
                verdict: Classification::NotApplicable,
                threshold: None,
                reason: Some("superposition".into()),
            });
            continue;
        }
        let region = impossibility_region(bound, &point, poly)?;
        let mut v = BoundVerdict {
            bound,
            verdict: region.verdict.into(),
            threshold: region.threshold,
            reason: region.reason,
        };
        if bound == BoundKind::Counting && mode == Mode::General {
            let d = p.dummies.value(p.n);
            let c = p.comms.value(p.n);
            let meets = p.always_sends && d >= c * (1.0 - 1.0 / poly);
            v.verdict = if meets { Classification::Meets } else { Classification::Violates };
            v.threshold = Some(c * (1.0 - 1.0 / poly));
        }
        verdicts.push(v);
    }
    Ok(AtlasReport {
        preset: p.name.clone(),
        row: p.row.clone(),
        mode,
        lambda,
        poly_lambda: poly,
        verdicts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub l_max: u32,
    pub beta: f64,
    pub counting_min_beta: f64,
    pub trilemma_min_beta: f64,
    pub dropping_min_p: f64,
    pub counting_verdict: Classification,
    pub trilemma_verdict: Classification,
    pub dropping_verdict: Classification,
}

pub const GRID_HEADER: &str = "l_max,beta,counting_min_beta,trilemma_min_beta,dropping_min_p,counting_verdict,trilemma_verdict,dropping_verdict";

/// `lo, lo + step, ...` up to `hi`, rounded to nine decimals.
pub fn steps(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 || hi < lo {
        return invalid("range needs step > 0 and hi >= lo");
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect())
}

/// One row per `(l_max, beta)` with `p = beta`, sorted by `l_max` then `beta`.
pub fn emit_grid(
    l_max: std::ops::RangeInclusive<u32>,
    betas: &[f64],
    n: u32,
    lambda: f64,
    poly: f64,
) -> Result<Vec<GridRow>> {
    if l_max.is_empty() || betas.is_empty() {
        return invalid("grid ranges must be nonempty");
    }
    if *l_max.start() < 2 {
        return invalid("grid latencies start at 2");
    }
    let mut rows = Vec::new();
    for l in l_max {
        for &beta in betas {
            let point = RegionPoint { lambda, ..RegionPoint::new(l, beta, n) };
            let v = |b| impossibility_region(b, &point, poly).map(|r| Classification::from(r.verdict));
            rows.push(GridRow {
                l_max: l,
                beta,
                counting_min_beta: counting_min_beta(point.out_rate, poly),
                trilemma_min_beta: trilemma_min_beta(l, 0, poly).expect("l_max >= 2"),
                dropping_min_p: dropping_min_p(lambda, point.log_base, poly, l),
                counting_verdict: v(BoundKind::Counting)?,
                trilemma_verdict: v(BoundKind::Trilemma)?,
                dropping_verdict: v(BoundKind::Dropping)?,
            });
        }
    }
    Ok(rows)
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from(GRID_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.l_max,
            r.beta,
            r.counting_min_beta,
            r.trilemma_min_beta,
            r.dropping_min_p,
            r.counting_verdict,
            r.trilemma_verdict,
            r.dropping_verdict
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counting(name: &str, mode: Mode) -> Classification {
        let p = preset(name, 1000, 256.0).unwrap();
        classify(&p, mode, 256.0, 1000.0).unwrap().get(BoundKind::Counting).verdict
    }

    #[test]
    fn superposed_systems_only_face_counting() {
        let p = preset("dcnet", 1000, 256.0).unwrap();
        let r = classify(&p, Mode::General, 256.0, 1000.0).unwrap();
        assert_eq!(r.get(BoundKind::Counting).verdict, Classification::Meets);
        for b in [BoundKind::Trilemma, BoundKind::Dropping] {
            assert_eq!(r.get(b).verdict, Classification::NotApplicable);
            assert_eq!(r.get(b).reason.as_deref(), Some("superposition"));
        }
    }

    #[test]
    fn herd_depends_on_mode() {
        assert_eq!(counting("herd", Mode::Point), Classification::Meets);
        assert_eq!(counting("herd", Mode::General), Classification::Violates);
    }

    #[test]
    fn tor_violates_everything() {
        let p = preset("tor", 1000, 256.0).unwrap();
        for mode in [Mode::Point, Mode::General] {
            let r = classify(&p, mode, 256.0, 1000.0).unwrap();
            assert!(r.verdicts.iter().all(|v| v.verdict == Classification::Violates));
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("nope", 10, 256.0), Err(Error::NotFound(_))));
    }

    #[test]
    fn grid_shape() {
        let betas = steps(0.0, 1.0, 0.05).unwrap();
        assert_eq!(betas.len(), 21);
        assert_eq!(betas[20], 1.0);
        let rows = emit_grid(2..=10, &betas, 1000, 256.0, 1000.0).unwrap();
        assert_eq!(rows.len(), 9 * 21);
        let csv = grid_csv(&rows);
        assert!(csv.starts_with(GRID_HEADER));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }
}
