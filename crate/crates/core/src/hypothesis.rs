//! Prior weights over program indices and conditioning on a history.
//!
//! Totality of a program is undecidable, so nothing here pretends to know the
//! normalizer exactly. Every index up to a cutoff `N` is classified against the
//! history at a step budget; the rest is tail mass whose size the prior knows
//! in closed form. Posterior weights come out as intervals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{gamma, History};
use crate::minilang::{decode, execute, Action, Alphabets, Program, ProgramIndex, StepBudget, Tape};
use crate::num::{pow2_neg, Rational};
use crate::par;

/// Positive rational weights on indices with a closed-form tail.
pub trait Prior: Sync + Send {
    /// `rho(i)`, or `None` when the exact value is too small to represent.
    fn weight(&self, i: &BigUint) -> Option<Rational>;

    /// `sum_{i > n} rho(i)`.
    fn tail_after(&self, n: u64) -> Rational;

    /// `sum_i rho(i)`.
    fn total(&self) -> Rational;

    fn name(&self) -> String;

    /// Some `e` with `rho(i) <= 2^-e`, cheap even when `rho(i)` itself is not.
    fn log2_inverse_floor(&self, i: &BigUint) -> u64;

    fn weight_u64(&self, i: u64) -> Rational {
        self.weight(&BigUint::from(i)).expect("weights of machine-sized indices are representable")
    }

    /// `sum_{i <= n} rho(i)`.
    fn head_sum(&self, n: u64) -> Rational {
        self.total() - self.tail_after(n)
    }
}

/// `rho(i) = 2^-i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Geometric;

/// Largest exponent for which `2^-i` is materialized (a 2 MiB denominator).
const GEOMETRIC_MAX_EXPONENT: u64 = 1 << 24;

impl Prior for Geometric {
    fn weight(&self, i: &BigUint) -> Option<Rational> {
        let e = u64::try_from(i).ok().filter(|&e| e <= GEOMETRIC_MAX_EXPONENT)?;
        Some(pow2_neg(e))
    }

    fn tail_after(&self, n: u64) -> Rational {
        pow2_neg(n)
    }

    fn total(&self) -> Rational {
        Rational::from_integer(2.into())
    }

    fn name(&self) -> String {
        "geometric".into()
    }

    fn log2_inverse_floor(&self, i: &BigUint) -> u64 {
        u64::try_from(i).unwrap_or(u64::MAX)
    }
}

/// `rho(i) = 1 / ((i + 1)(i + 2))`, which telescopes to a total of 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Quadratic;

impl Prior for Quadratic {
    fn weight(&self, i: &BigUint) -> Option<Rational> {
        let d = (i + 1u8) * (i + 2u8);
        Some(Rational::new(1.into(), d.into()))
    }

    fn tail_after(&self, n: u64) -> Rational {
        Rational::new(1.into(), (BigUint::from(n) + 2u8).into())
    }

    fn total(&self) -> Rational {
        Rational::one()
    }

    fn name(&self) -> String {
        "quadratic".into()
    }

    fn log2_inverse_floor(&self, i: &BigUint) -> u64 {
        ((i + 1u8) * (i + 2u8)).bits() - 1
    }
}

/// Looks a prior up by name.
pub fn prior_by_name(name: &str) -> Result<Box<dyn Prior>> {
    match name {
        "geometric" => Ok(Box::new(Geometric)),
        "quadratic" => Ok(Box::new(Quadratic)),
        other => Err(Error::Parse(format!("unknown prior {other:?} (expected geometric or quadratic)"))),
    }
}

/// Where a program stands against a history. Prefix positions are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Consistent,
    Refuted { at: usize },
    Unknown { at: usize },
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Consistent => f.write_str("consistent"),
            Classification::Refuted { at } => write!(f, "refuted@{at}"),
            Classification::Unknown { at } => write!(f, "unknown@{at}"),
        }
    }
}

pub fn classify(q: &Program, h: &History, budget: StepBudget, alphabets: &Alphabets) -> Result<Classification> {
    let g = gamma(q, h.actions(), budget, alphabets)?;
    if let Some(k) = g.perceptions.iter().zip(h.perceptions()).position(|(a, b)| a != b) {
        return Ok(Classification::Refuted { at: k + 1 });
    }
    Ok(match g.unknown_at {
        Some(at) => Classification::Unknown { at },
        None => Classification::Consistent,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub classification: Classification,
    pub rho: Rational,
}

/// Classification of every index up to a cutoff, with exact mass totals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosteriorTable {
    cutoff: u64,
    entries: Vec<Entry>,
    /// Indices beyond the cutoff that were classified individually.
    injected: BTreeMap<BigUint, Entry>,
    pub consistent_mass: Rational,
    pub refuted_mass: Rational,
    pub unknown_mass: Rational,
    /// Prior mass beyond the cutoff that has not been injected.
    pub tail_mass: Rational,
}

/// Classifies `decode(i)` for every `i <= cutoff`.
pub fn build_posterior(
    h: &History,
    cutoff: u64,
    budget: StepBudget,
    prior: &dyn Prior,
    alphabets: &Alphabets,
) -> Result<PosteriorTable> {
    h.validate(alphabets)?;
    let n = usize::try_from(cutoff)
        .ok()
        .and_then(|c| c.checked_add(1))
        .ok_or_else(|| Error::Domain(format!("cutoff {cutoff} too large")))?;
    let entries = par::map_range(n, |i| {
        let q = decode(&ProgramIndex::from(i as u64));
        let classification = classify(&q, h, budget, alphabets).expect("history validated above");
        Entry { classification, rho: prior.weight_u64(i as u64) }
    });
    let mut table = PosteriorTable {
        cutoff,
        entries,
        injected: BTreeMap::new(),
        consistent_mass: Rational::zero(),
        refuted_mass: Rational::zero(),
        unknown_mass: Rational::zero(),
        tail_mass: prior.tail_after(cutoff),
    };
    let [c, r, u] = table.class_sums(table.entries.iter());
    table.consistent_mass = c;
    table.refuted_mass = r;
    table.unknown_mass = u;
    if table.consistent_mass.is_zero() {
        return Err(Error::EmptySupport);
    }
    Ok(table)
}

impl PosteriorTable {
    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Entry for any classified index, enumerated or injected.
    pub fn entry(&self, index: &BigUint) -> Option<&Entry> {
        match u64::try_from(index) {
            Ok(i) if i <= self.cutoff => self.entries.get(i as usize),
            _ => self.injected.get(index),
        }
    }

    pub fn injected(&self) -> impl Iterator<Item = (&BigUint, &Entry)> {
        self.injected.iter()
    }

    /// Mass sums per class, added in index order.
    fn class_sums<'a>(&self, entries: impl Iterator<Item = &'a Entry>) -> [Rational; 3] {
        let mut sums = [Rational::zero(), Rational::zero(), Rational::zero()];
        for e in entries {
            let slot = match e.classification {
                Classification::Consistent => 0,
                Classification::Refuted { .. } => 1,
                Classification::Unknown { .. } => 2,
            };
            sums[slot] += &e.rho;
        }
        sums
    }

    /// Sum of the enumerated weights, `sum_{i <= N} rho(i)`.
    pub fn enumerated_mass(&self) -> Rational {
        &self.consistent_mass + &self.refuted_mass + &self.unknown_mass - self.injected_mass()
    }

    fn injected_mass(&self) -> Rational {
        self.injected.values().fold(Rational::zero(), |acc, e| acc + &e.rho)
    }

    /// Classifies one index beyond the cutoff and moves its weight out of the tail.
    /// Indices at or below the cutoff are left alone.
    pub fn inject(
        &mut self,
        index: &BigUint,
        h: &History,
        budget: StepBudget,
        prior: &dyn Prior,
        alphabets: &Alphabets,
    ) -> Result<Classification> {
        if let Some(e) = self.entry(index) {
            return Ok(e.classification);
        }
        let rho = prior
            .weight(index)
            .ok_or_else(|| Error::Domain(format!("prior weight of index {index} is not representable")))?;
        let q = decode(&ProgramIndex::new(index.clone()));
        let classification = classify(&q, h, budget, alphabets)?;
        self.tail_mass -= &rho;
        match classification {
            Classification::Consistent => self.consistent_mass += &rho,
            Classification::Refuted { .. } => self.refuted_mass += &rho,
            Classification::Unknown { .. } => self.unknown_mass += &rho,
        }
        self.injected.insert(index.clone(), Entry { classification, rho });
        Ok(classification)
    }

    /// `consistent + unknown + tail`: the largest the normalizer can be.
    pub fn normalizer_upper(&self) -> Rational {
        &self.consistent_mass + &self.unknown_mass + &self.tail_mass
    }

    /// Posterior weight bounds `(rho / (C + U + T), rho / C)` of a consistent index.
    pub fn posterior_bounds(&self, index: &BigUint) -> Option<(Rational, Rational)> {
        let e = self.entry(index)?;
        if e.classification != Classification::Consistent {
            return None;
        }
        Some((&e.rho / self.normalizer_upper(), &e.rho / &self.consistent_mass))
    }

    pub fn posterior_lower(&self, index: &BigUint) -> Option<Rational> {
        self.posterior_bounds(index).map(|b| b.0)
    }

    /// One row per index in order: enumerated ones first, then injected ones.
    pub fn rows(&self) -> Vec<PosteriorRow> {
        let enumerated = self.entries.iter().enumerate().map(|(i, e)| (BigUint::from(i), e));
        let injected = self.injected.iter().map(|(i, e)| (i.clone(), e));
        enumerated
            .chain(injected)
            .map(|(index, e)| {
                let bounds = self.posterior_bounds(&index);
                PosteriorRow {
                    index,
                    classification: e.classification,
                    rho: e.rho.clone(),
                    post_lower: bounds.as_ref().map(|b| b.0.clone()),
                    post_upper: bounds.map(|b| b.1),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosteriorRow {
    pub index: BigUint,
    pub classification: Classification,
    pub rho: Rational,
    pub post_lower: Option<Rational>,
    pub post_upper: Option<Rational>,
}

/// Bracket on `O = sum of rho over total programs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizationBounds {
    pub lower: Rational,
    pub upper: Rational,
    pub certified: u64,
    pub never_halting: u64,
}

/// Brackets the normalizer using only indices up to `cutoff`.
///
/// An index counts towards the lower bound when its program is structurally
/// certified total (forward jumps only, ending in `halt`) and halts within the
/// budget on every action string of length `1..=probe_len`. Programs with no
/// `halt` at all are certainly not total and are left out of the upper bound.
/// Everything else, plus the tail, goes into the upper bound.
pub fn normalization_bounds(
    cutoff: u64,
    budget: StepBudget,
    probe_len: usize,
    prior: &dyn Prior,
    alphabets: &Alphabets,
) -> Result<NormalizationBounds> {
    if probe_len == 0 {
        return Err(Error::Domain("probe length must be at least 1".into()));
    }
    let probes = probe_strings(alphabets.action_size(), probe_len)?;
    let n = usize::try_from(cutoff).map_err(|_| Error::Domain("cutoff too large".into()))? + 1;
    let verdicts = par::map_range(n, |i| {
        let q = decode(&ProgramIndex::from(i as u64));
        if q.never_halts() {
            return Totality::Never;
        }
        let halts_on_probes = probes
            .iter()
            .all(|s| execute(&q, Tape::Actions(s), budget).outcome.halted().is_some());
        if q.is_certified_total() && halts_on_probes {
            Totality::Certified
        } else {
            Totality::Open
        }
    });
    let mut b = NormalizationBounds {
        lower: Rational::zero(),
        upper: prior.tail_after(cutoff),
        certified: 0,
        never_halting: 0,
    };
    for (i, v) in verdicts.into_iter().enumerate() {
        let rho = prior.weight_u64(i as u64);
        match v {
            Totality::Certified => {
                b.certified += 1;
                b.upper += &rho;
                b.lower += rho;
            }
            Totality::Open => b.upper += rho,
            Totality::Never => b.never_halting += 1,
        }
    }
    Ok(b)
}

enum Totality {
    Certified,
    Open,
    Never,
}

fn probe_strings(action_size: u32, max_len: usize) -> Result<Vec<Vec<Action>>> {
    let count: u128 = (1..=max_len as u32).map(|l| (action_size as u128).saturating_pow(l)).sum();
    if count > 1 << 16 {
        return Err(Error::Domain(format!("{count} probe strings is too many")));
    }
    let mut all: Vec<Vec<Action>> = vec![vec![]];
    let mut out = Vec::new();
    for _ in 0..max_len {
        all = all
            .iter()
            .flat_map(|s| {
                (0..action_size).map(move |a| {
                    let mut t = s.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
        out.extend(all.iter().cloned());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse_asm, PerceptionMode};
    use crate::Natural;

    fn alpha() -> Alphabets {
        Alphabets::new(2, PerceptionMode::Naturals).unwrap()
    }

    fn budget(n: u64) -> StepBudget {
        StepBudget::new(n).unwrap()
    }

    fn q(s: &str) -> Rational {
        crate::num::parse_rational(s).unwrap()
    }

    #[test]
    fn geometric_weights() {
        assert_eq!(Geometric.weight_u64(0), q("1"));
        assert_eq!(Geometric.weight_u64(3), q("1/8"));
        let sum = (0..=20).fold(Rational::zero(), |a, i| a + Geometric.weight_u64(i));
        assert_eq!(sum, q("2") - pow2_neg(20));
        assert_eq!(Geometric.head_sum(20), sum);
        assert!(Geometric.weight(&(BigUint::one() << 40u8)).is_none());
    }

    #[test]
    fn quadratic_tail_is_exact() {
        let head = (0..=30).fold(Rational::zero(), |a, i| a + Quadratic.weight_u64(i));
        assert_eq!(head + Quadratic.tail_after(30), Rational::one());
        for i in 0u64..200 {
            let e = Quadratic.log2_inverse_floor(&BigUint::from(i));
            assert!(Quadratic.weight_u64(i) <= pow2_neg(e));
        }
    }

    #[test]
    fn classification_cases() {
        let c = parse_asm("push 3\nhalt").unwrap();
        let a = alpha();
        let three = |n: usize| vec![Natural::from(3u8); n];
        assert_eq!(classify(&c, &History::empty(), budget(5), &a).unwrap(), Classification::Consistent);
        let h = History::new(vec![0, 1, 0], three(3)).unwrap();
        assert_eq!(classify(&c, &h, budget(5), &a).unwrap(), Classification::Consistent);
        let mut xs = three(3);
        xs[1] = Natural::from(2u8);
        let h = History::new(vec![0, 1, 0], xs).unwrap();
        assert_eq!(classify(&c, &h, budget(5), &a).unwrap(), Classification::Refuted { at: 2 });
        let lp = parse_asm("jmp 0").unwrap();
        assert_eq!(classify(&lp, &h, budget(5), &a).unwrap(), Classification::Unknown { at: 1 });
    }

    #[test]
    fn empty_history_keeps_everything() {
        let t = build_posterior(&History::empty(), 10, budget(50), &Geometric, &alpha()).unwrap();
        assert!(t.entries().iter().all(|e| e.classification == Classification::Consistent));
        assert_eq!(t.consistent_mass, Geometric.head_sum(10));
        assert_eq!(t.normalizer_upper(), q("2"));
        let (lo, hi) = t.posterior_bounds(&BigUint::from(3u8)).unwrap();
        assert_eq!(lo, q("1/16"));
        assert_eq!(hi, q("1/8") / Geometric.head_sum(10));
    }

    #[test]
    fn injection_moves_tail_mass() {
        let a = alpha();
        let mut t = build_posterior(&History::empty(), 10, budget(50), &Geometric, &a).unwrap();
        let before = t.normalizer_upper();
        let idx = BigUint::from(40u8);
        assert_eq!(t.inject(&idx, &History::empty(), budget(50), &Geometric, &a).unwrap(), Classification::Consistent);
        assert_eq!(t.normalizer_upper(), before);
        assert_eq!(t.tail_mass, pow2_neg(10) - pow2_neg(40));
        assert_eq!(t.posterior_lower(&idx), Some(pow2_neg(41)));
        assert_eq!(t.enumerated_mass(), Geometric.head_sum(10));
    }

    #[test]
    fn normalizer_bracket() {
        let a = alpha();
        let b0 = normalization_bounds(0, budget(50), 2, &Geometric, &a).unwrap();
        assert_eq!(b0.lower, Rational::zero());
        assert_eq!(b0.never_halting, 1);
        let b = normalization_bounds(200, budget(50), 2, &Geometric, &a).unwrap();
        assert!(b.lower <= b.upper && b.upper <= q("2"));
        assert!(b.certified > 0);
    }
}
