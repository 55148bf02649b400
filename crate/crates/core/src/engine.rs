//! Conditional expected utility as certified intervals, divergence scans and
//! convergence schedules.
//!
//! Mass bookkeeping: `C` is the consistent mass up to the cutoff and `M` the
//! unknown plus tail mass, whose programs may or may not be consistent. The
//! expectation is a weighted average of the consistent programs' utilities
//! and of up to `M` further mass valued anywhere in the spec's global range,
//! which gives
//!
//! ```text
//! lower = (sum rho_i * l_i + M * inf U) / (C + M)
//! upper = (sum rho_i * u_i + M * sup U) / (C + M)
//! ```
//!
//! where `[l_i, u_i]` are the utility bounds of program `i`'s rolled-out prefix.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
#[cfg(test)]
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{build_posterior, classify, Classification, PosteriorTable, Prior};
use crate::interaction::{rollout_from, History, Policy, RolloutStatus};
use crate::minilang::{decode, encode, Alphabets, ProgramIndex, StepBudget};
use crate::num::{serde_rational, ExtRational, Rational};
use crate::par;
use crate::utility::UtilitySpec;
use crate::witness::{magnitude, term_from_bounds, theta_g, theta_outputs, unbounded_on, Direction, TermBounds, WitnessRecord};
use crate::Natural;

/// Bracket on the conditional expected utility at one resolution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EUInterval {
    pub lower: ExtRational,
    pub upper: ExtRational,
    #[serde(with = "serde_rational")]
    pub consistent_mass: Rational,
    #[serde(with = "serde_rational")]
    pub refuted_mass: Rational,
    #[serde(with = "serde_rational")]
    pub unknown_mass: Rational,
    #[serde(with = "serde_rational")]
    pub tail_mass: Rational,
    pub cutoff: u64,
    pub horizon: usize,
    pub budget: u64,
    /// Part of `upper - lower` from consistent programs whose rollout completed.
    pub horizon_gap: ExtRational,
    /// Part from consistent programs whose rollout ran out of budget.
    pub truncation_gap: ExtRational,
    /// Part from unknown and tail mass.
    pub mass_gap: ExtRational,
    pub truncated: u64,
}

impl EUInterval {
    pub fn gap(&self) -> Option<ExtRational> {
        self.upper.checked_add(&self.lower.neg())
    }
}

fn ext_sub(a: &ExtRational, b: &ExtRational) -> ExtRational {
    a.checked_add(&b.neg()).unwrap_or(ExtRational::PosInf)
}

fn ext_sum(a: &ExtRational, b: &ExtRational) -> ExtRational {
    // Only the lower side can see -inf and only the upper side +inf, so the
    // undefined sum never arises; keep the first operand if it somehow does.
    a.checked_add(b).unwrap_or_else(|| a.clone())
}

/// Utility bounds of every consistent enumerated program's rollout, by index.
fn rollout_bounds(
    table: &PosteriorTable,
    p: &Policy,
    h: &History,
    spec: &UtilitySpec,
    horizon: usize,
    budget: StepBudget,
    alphabets: &Alphabets,
) -> Vec<Option<(ExtRational, ExtRational, bool)>> {
    let todo: Vec<(u64, bool)> = table
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| (i as u64, e.classification == Classification::Consistent))
        .collect();
    par::map_slice(&todo, |&(i, consistent)| {
        if !consistent {
            return None;
        }
        let q = decode(&ProgramIndex::from(i));
        let r = rollout_from(&q, p, h, horizon, budget, alphabets);
        let w = [h.perceptions(), r.perceptions.as_slice()].concat();
        let (l, u) = spec.bounds(&w);
        Some((l, u, r.status == RolloutStatus::Complete))
    })
}

/// Interval for the expected utility of `p` after `h`.
#[allow(clippy::too_many_arguments)]
pub fn expected_utility(
    p: &Policy,
    h: &History,
    spec: &UtilitySpec,
    cutoff: u64,
    horizon: usize,
    budget: StepBudget,
    prior: &dyn Prior,
    alphabets: &Alphabets,
) -> Result<EUInterval> {
    spec.check_alphabets(alphabets)?;
    p.validate(alphabets)?;
    let table = build_posterior(h, cutoff, budget, prior, alphabets)?;
    let bounds = rollout_bounds(&table, p, h, spec, horizon, budget, alphabets);

    let mut a_lower = ExtRational::zero();
    let mut a_upper = ExtRational::zero();
    let mut horizon_gap = ExtRational::zero();
    let mut truncation_gap = ExtRational::zero();
    let mut truncated = 0;
    for (e, b) in table.entries().iter().zip(&bounds) {
        let Some((l, u, complete)) = b else { continue };
        a_lower = ext_sum(&a_lower, &l.scale(&e.rho));
        a_upper = ext_sum(&a_upper, &u.scale(&e.rho));
        let g = ext_sub(u, l).scale(&e.rho);
        if *complete {
            horizon_gap = ext_sum(&horizon_gap, &g);
        } else {
            truncated += 1;
            truncation_gap = ext_sum(&truncation_gap, &g);
        }
    }
    let m = &table.unknown_mass + &table.tail_mass;
    let z = table.normalizer_upper();
    let inv_z = Rational::one() / &z;
    let lower = ext_sum(&a_lower, &spec.global_inf().scale(&m)).scale(&inv_z);
    let upper = ext_sum(&a_upper, &spec.global_sup().scale(&m)).scale(&inv_z);
    let mass_gap = ext_sub(&spec.global_sup(), &spec.global_inf()).scale(&m).scale(&inv_z);
    Ok(EUInterval {
        lower,
        upper,
        consistent_mass: table.consistent_mass.clone(),
        refuted_mass: table.refuted_mass.clone(),
        unknown_mass: table.unknown_mass.clone(),
        tail_mass: table.tail_mass.clone(),
        cutoff,
        horizon,
        budget: budget.max_steps(),
        horizon_gap: horizon_gap.scale(&inv_z),
        truncation_gap: truncation_gap.scale(&inv_z),
        mass_gap,
        truncated,
    })
}

/// One step of a refinement schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub cutoff: u64,
    pub horizon: usize,
    pub budget: StepBudget,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub utility: String,
    pub intervals: Vec<EUInterval>,
    /// Lower endpoints nondecreasing and upper endpoints nonincreasing.
    pub monotone: bool,
    /// Every gap equals its three components and the horizon part is within
    /// the discount tail bound.
    pub gaps_accounted: bool,
}

/// Intervals along a schedule for a bounded utility.
pub fn convergence_report(
    p: &Policy,
    h: &History,
    spec: &UtilitySpec,
    schedule: &[Resolution],
    prior: &dyn Prior,
    alphabets: &Alphabets,
) -> Result<ConvergenceReport> {
    if !spec.is_bounded() {
        return Err(Error::Utility { utility: spec.name(), msg: "convergence needs a bounded utility".into() });
    }
    let intervals = schedule
        .iter()
        .map(|r| expected_utility(p, h, spec, r.cutoff, r.horizon, r.budget, prior, alphabets))
        .collect::<Result<Vec<_>>>()?;
    let monotone = intervals.windows(2).all(|w| w[0].lower <= w[1].lower && w[0].upper >= w[1].upper);
    let gaps_accounted = intervals.iter().all(|iv| {
        let parts = ext_sum(&ext_sum(&iv.horizon_gap, &iv.truncation_gap), &iv.mass_gap);
        let sums = iv.gap() == Some(parts);
        let tail = horizon_tail_bound(spec, h.len() + iv.horizon);
        sums && tail.is_none_or(|t| iv.horizon_gap <= ExtRational::Finite(t))
    });
    Ok(ConvergenceReport { utility: spec.name(), intervals, monotone, gaps_accounted })
}

/// `u_upper - u_lower` on a prefix of length `len`, when it depends on the length only.
pub fn horizon_tail_bound(spec: &UtilitySpec, len: usize) -> Option<Rational> {
    match spec {
        UtilitySpec::DiscountedReward { gamma } => {
            let mut w = Rational::one();
            for _ in 0..=len {
                w *= gamma;
            }
            Some(w / (Rational::one() - gamma))
        }
        UtilitySpec::Negated(inner) => horizon_tail_bound(inner, len),
        _ => None,
    }
}

/// Pairwise dominance: `dominates[a][b]` iff `lower(a) > upper(b)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyComparison {
    pub intervals: Vec<EUInterval>,
    pub dominates: Vec<Vec<bool>>,
}

#[allow(clippy::too_many_arguments)]
pub fn compare_policies(
    policies: &[Policy],
    h: &History,
    spec: &UtilitySpec,
    cutoff: u64,
    horizon: usize,
    budget: StepBudget,
    prior: &dyn Prior,
    alphabets: &Alphabets,
) -> Result<PolicyComparison> {
    let intervals = policies
        .iter()
        .map(|p| expected_utility(p, h, spec, cutoff, horizon, budget, prior, alphabets))
        .collect::<Result<Vec<_>>>()?;
    let dominates = intervals
        .iter()
        .map(|a| intervals.iter().map(|b| a.lower > b.upper).collect())
        .collect();
    Ok(PolicyComparison { intervals, dominates })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanDirection {
    Above,
    Below,
    Both,
}

impl ScanDirection {
    fn directions(self) -> &'static [Direction] {
        match self {
            ScanDirection::Above => &[Direction::Above],
            ScanDirection::Below => &[Direction::Below],
            ScanDirection::Both => &[Direction::Above, Direction::Below],
        }
    }
}

impl std::str::FromStr for ScanDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "above" => Ok(ScanDirection::Above),
            "below" => Ok(ScanDirection::Below),
            "both" => Ok(ScanDirection::Both),
            _ => Err(Error::Parse(format!("unknown direction {s:?} (above, below or both)"))),
        }
    }
}

/// Caps for one escalation of a divergence scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStage {
    /// `theta_k` is examined for `k < theta_count`.
    pub theta_count: u64,
    pub theta_budget: StepBudget,
    /// Budget for classifying and rolling out environments.
    pub env_budget: StepBudget,
    /// Enumerated part of the posterior table.
    pub cutoff: u64,
    pub horizon: usize,
}

impl ScanStage {
    /// `self` followed by `count - 1` stages, each doubling the theta count and both budgets.
    pub fn doubling(self, count: usize) -> Result<Vec<ScanStage>> {
        let mut out = vec![self];
        for _ in 1..count {
            let s = *out.last().expect("non-empty");
            out.push(ScanStage {
                theta_count: s.theta_count * 2,
                theta_budget: StepBudget::new(s.theta_budget.max_steps() * 2)?,
                env_budget: StepBudget::new(s.env_budget.max_steps() * 2)?,
                ..s
            });
        }
        Ok(out)
    }
}

/// A theta index whose witness environment was evaluated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: u64,
    pub direction: Direction,
    pub v_bits: u64,
    pub env_index: ProgramIndex,
    pub classification: Option<Classification>,
    /// `bits(num) - bits(den)` of the certified term magnitude; display only.
    pub term_log2_approx: Option<i64>,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: ScanStage,
    /// `theta_k` that halted within the theta budget.
    pub halting: u64,
    /// Distinct outputs that could possibly give a term of magnitude one.
    pub evaluated: u64,
    pub verified_above: u64,
    pub verified_below: u64,
    /// Certified bounds on the series truncated to the enumerated table plus the
    /// injected witnesses.
    pub partial_sum_lower: ExtRational,
    pub partial_sum_upper: ExtRational,
    pub candidates: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub utility: String,
    pub direction: ScanDirection,
    pub target: usize,
    /// At least `target` verified terms in each requested direction in the last stage.
    pub complete: bool,
    /// Verified witnesses of the last stage.
    pub records: Vec<WitnessRecord>,
    pub stages: Vec<StageSummary>,
}

impl DivergenceReport {
    pub fn verified(&self, dir: Direction) -> usize {
        self.records.iter().filter(|r| r.direction == dir).count()
    }

    /// Verified counts in `dir` never drop from one stage to the next.
    pub fn counts_nondecreasing(&self, dir: Direction) -> bool {
        let counts: Vec<u64> = self
            .stages
            .iter()
            .map(|s| match dir {
                Direction::Above => s.verified_above,
                Direction::Below => s.verified_below,
            })
            .collect();
        counts.windows(2).all(|w| w[0] <= w[1])
    }
}

struct Evaluated {
    candidate: Candidate,
    record: Option<WitnessRecord>,
    /// Bounds on the term, when the environment is consistent and beyond the cutoff.
    injected: Option<(BigUint, TermBounds)>,
}

/// Looks for series terms of magnitude at least one.
///
/// Every halting `theta_k` (first index per distinct output value) is turned
/// into the witness environment `G(k)`, placed at its own index in the
/// posterior, rolled out under `p`, and kept when the exact product of its
/// utility bound and posterior lower bound reaches one in size. Distinct
/// output values give environments with distinct utilities, hence distinct
/// series terms.
#[allow(clippy::too_many_arguments)]
pub fn divergence_scan(
    p: &Policy,
    h: &History,
    spec: &UtilitySpec,
    direction: ScanDirection,
    target: usize,
    stages: &[ScanStage],
    prior: &dyn Prior,
    alphabets: &Alphabets,
) -> Result<DivergenceReport> {
    spec.check_alphabets(alphabets)?;
    p.validate(alphabets)?;
    h.validate(alphabets)?;
    for &d in direction.directions() {
        if !unbounded_on(spec, h, d) {
            return Err(Error::Utility {
                utility: spec.name(),
                msg: format!("not unbounded {d:?} on sequences extending the history"),
            });
        }
    }
    let mut report = DivergenceReport {
        utility: spec.name(),
        direction,
        target,
        complete: target == 0,
        records: Vec::new(),
        stages: Vec::new(),
    };
    if target == 0 {
        return Ok(report);
    }
    for stage in stages {
        let (summary, records) = scan_stage(p, h, spec, direction, stage, prior, alphabets)?;
        report.records = records;
        report.stages.push(summary);
    }
    report.complete = direction.directions().iter().all(|&d| report.verified(d) >= target);
    Ok(report)
}

fn scan_stage(
    p: &Policy,
    h: &History,
    spec: &UtilitySpec,
    direction: ScanDirection,
    stage: &ScanStage,
    prior: &dyn Prior,
    alphabets: &Alphabets,
) -> Result<(StageSummary, Vec<WitnessRecord>)> {
    let outputs = theta_outputs(stage.theta_count, stage.theta_budget);
    let halting = outputs.iter().filter(|o| o.is_some()).count() as u64;
    let mut table = build_posterior(h, stage.cutoff, stage.env_budget, prior, alphabets)?;
    let z = table.normalizer_upper();
    let consistent = table.consistent_mass.clone();

    // Smallest index per distinct value, kept only if the value is large enough
    // that |U| <= 2v + n + 2 could still beat 1 / rho(G(k)) * Z.
    let slack = z.denom().bits() as i64 - z.numer().bits() as i64 + 1;
    let mut seen = HashSet::new();
    let mut work = Vec::new();
    for &dir in direction.directions() {
        for (k, out) in outputs.iter().enumerate() {
            let Some(v) = out else { continue };
            let reach = (v * 2u8 + h.len() + 2u8).bits() as i64 + slack;
            let raw = ProgramIndex::from(k as u64);
            let mut envs = Vec::with_capacity(2);
            if let Ok(g) = theta_g(&raw, h, spec, dir) {
                envs.push(encode(&g));
            }
            // theta_k itself may already be a witness, e.g. when the output
            // has the right parity and the history is empty; its index is
            // far smaller than that of any wrapped program.
            if envs.first() != Some(&raw) {
                envs.push(raw);
            }
            for env in envs {
                let need = prior.log2_inverse_floor(env.value()).min(i64::MAX as u64) as i64;
                let wrapped = env.value() != &BigUint::from(k as u64);
                if reach < need || !seen.insert((dir, v, wrapped)) {
                    continue;
                }
                work.push((dir, k as u64, v, env));
            }
        }
    }
    let evaluated: Vec<Evaluated> = par::map_slice(&work, |(dir, k, v, env)| {
        evaluate(*dir, *k, v, env, p, h, spec, stage, &table, &z, &consistent, prior, alphabets)
    });

    let mut records = Vec::new();
    let mut candidates = Vec::new();
    let mut injected = BTreeMap::new();
    for e in evaluated {
        candidates.push(e.candidate);
        records.extend(e.record);
        if let Some((idx, b)) = e.injected {
            injected.entry(idx).or_insert(b);
        }
    }
    for idx in injected.keys() {
        table.inject(idx, h, stage.env_budget, prior, alphabets)?;
    }
    let (mut lo, mut hi) = table_partial_sums(&table, p, h, spec, stage, alphabets);
    for b in injected.values() {
        lo = ext_sum(&lo, &b.lower);
        hi = ext_sum(&hi, &b.upper);
    }
    let count = |d: Direction| records.iter().filter(|r: &&WitnessRecord| r.direction == d).count() as u64;
    let summary = StageSummary {
        stage: *stage,
        halting,
        evaluated: candidates.len() as u64,
        verified_above: count(Direction::Above),
        verified_below: count(Direction::Below),
        partial_sum_lower: lo,
        partial_sum_upper: hi,
        candidates,
    };
    Ok((summary, records))
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    dir: Direction,
    k: u64,
    v: &Natural,
    env: &ProgramIndex,
    p: &Policy,
    h: &History,
    spec: &UtilitySpec,
    stage: &ScanStage,
    table: &PosteriorTable,
    z: &Rational,
    consistent: &Rational,
    prior: &dyn Prior,
    alphabets: &Alphabets,
) -> Evaluated {
    let mut candidate = Candidate {
        k,
        direction: dir,
        v_bits: v.bits(),
        env_index: env.clone(),
        classification: None,
        term_log2_approx: None,
        verified: false,
    };
    let idle = |candidate| Evaluated { candidate, record: None, injected: None };
    let program = decode(env);
    let (classification, rho, enumerated) = match table.entry(env.value()) {
        Some(e) => (e.classification, e.rho.clone(), true),
        None => {
            let Ok(c) = classify(&program, h, stage.env_budget, alphabets) else { return idle(candidate) };
            let Some(rho) = prior.weight(env.value()) else {
                candidate.classification = Some(c);
                return idle(candidate);
            };
            (c, rho, false)
        }
    };
    candidate.classification = Some(classification);
    if classification != Classification::Consistent {
        return idle(candidate);
    }
    let post_lower = &rho / z;
    let post_upper = if enumerated { &rho / consistent } else { &rho / (consistent + &rho) };
    let r = rollout_from(&program, p, h, stage.horizon, stage.env_budget, alphabets);
    let w = [h.perceptions(), r.perceptions.as_slice()].concat();
    let (ul, uu) = spec.bounds(&w);
    let bounds = term_from_bounds(ul, uu, post_lower, &post_upper);
    let mag = magnitude(&bounds, dir);
    candidate.term_log2_approx = mag
        .as_ref()
        .filter(|m| !m.is_zero())
        .map(|m| m.numer().bits() as i64 - m.denom().bits() as i64);
    let record = mag.filter(|m| *m >= Rational::one()).map(|term_lower| WitnessRecord {
        j: k,
        u_j: k,
        v: v.clone(),
        env_index: env.clone(),
        direction: dir,
        term_lower,
    });
    candidate.verified = record.is_some();
    let injected = (!enumerated).then(|| (env.value().clone(), bounds));
    Evaluated { candidate, record, injected }
}

/// Sum of term bounds over the enumerated consistent programs.
fn table_partial_sums(
    table: &PosteriorTable,
    p: &Policy,
    h: &History,
    spec: &UtilitySpec,
    stage: &ScanStage,
    alphabets: &Alphabets,
) -> (ExtRational, ExtRational) {
    let bounds = rollout_bounds(table, p, h, spec, stage.horizon, stage.env_budget, alphabets);
    let z = table.normalizer_upper();
    let mut lo = ExtRational::zero();
    let mut hi = ExtRational::zero();
    for (e, b) in table.entries().iter().zip(bounds) {
        let Some((l, u, _)) = b else { continue };
        let post_lower = &e.rho / &z;
        let post_upper = &e.rho / &table.consistent_mass;
        let t = term_from_bounds(l, u, post_lower, &post_upper);
        lo = ext_sum(&lo, &t.lower);
        hi = ext_sum(&hi, &t.upper);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::Geometric;
    use crate::minilang::PerceptionMode;
    use crate::num::{parse_rational, pow2_neg};
    use crate::utility::naturals;

    fn budget(n: u64) -> StepBudget {
        StepBudget::new(n).unwrap()
    }

    fn nat_alpha() -> Alphabets {
        Alphabets::new(2, PerceptionMode::Naturals).unwrap()
    }

    fn half() -> UtilitySpec {
        UtilitySpec::discounted(parse_rational("1/2").unwrap()).unwrap()
    }

    #[test]
    fn zero_horizon_stays_in_global_range() {
        let iv = expected_utility(&Policy::Constant(0), &History::empty(), &half(), 64, 0, budget(100), &Geometric, &nat_alpha())
            .unwrap();
        assert!(iv.lower >= ExtRational::zero());
        assert!(iv.upper <= "1".parse().unwrap());
        assert_eq!(iv.gap(), Some(ext_sum(&ext_sum(&iv.horizon_gap, &iv.truncation_gap), &iv.mass_gap)));
    }

    #[test]
    fn fixed_first_perception_collapses_the_interval() {
        // Only x_1 matters and the history fixes it, so every consistent program
        // contributes exactly 1; what is left is the unknown and tail mass.
        let h = History::new(vec![0], naturals(&[1])).unwrap();
        let spec = UtilitySpec::FirstPerception;
        let a = nat_alpha();
        let coarse = expected_utility(&Policy::Constant(0), &h, &spec, 200, 1, budget(200), &Geometric, &a).unwrap();
        let fine = expected_utility(&Policy::Constant(0), &h, &spec, 2000, 1, budget(200), &Geometric, &a).unwrap();
        assert!(coarse.lower <= fine.lower);
        let one: ExtRational = "1".parse().unwrap();
        assert!(fine.lower <= one);
        // The lower end is C / (C + M).
        let c = &fine.consistent_mass;
        let m = &fine.unknown_mass + &fine.tail_mass;
        assert_eq!(fine.lower, ExtRational::Finite(c / (c + &m)));
    }

    #[test]
    fn schedule_is_monotone_and_gaps_add_up() {
        let schedule: Vec<Resolution> = [(16, 2), (64, 4), (256, 8)]
            .iter()
            .map(|&(cutoff, horizon)| Resolution { cutoff, horizon, budget: budget(200) })
            .collect();
        let r = convergence_report(&Policy::Constant(1), &History::empty(), &half(), &schedule, &Geometric, &nat_alpha())
            .unwrap();
        assert!(r.monotone && r.gaps_accounted);
        assert!(r.intervals[2].horizon_gap <= ExtRational::Finite(pow2_neg(8)));
        assert!(convergence_report(&Policy::Constant(1), &History::empty(), &UtilitySpec::FirstPerception, &schedule, &Geometric, &nat_alpha()).is_err());
    }

    #[test]
    fn identical_policies_are_incomparable() {
        let ps = [Policy::Constant(0), Policy::Constant(0)];
        let c = compare_policies(&ps, &History::empty(), &half(), 32, 3, budget(100), &Geometric, &nat_alpha()).unwrap();
        assert_eq!(c.intervals[0], c.intervals[1]);
        assert!(!c.dominates[0][1] && !c.dominates[1][0]);
    }

    #[test]
    fn empty_target_is_trivially_complete() {
        let stage = ScanStage {
            theta_count: 16,
            theta_budget: budget(16),
            env_budget: budget(32),
            cutoff: 8,
            horizon: 1,
        };
        let r = divergence_scan(&Policy::Constant(0), &History::empty(), &UtilitySpec::FirstPerception, ScanDirection::Above, 0, &[stage], &Geometric, &nat_alpha())
            .unwrap();
        assert!(r.complete && r.records.is_empty() && r.stages.is_empty());
        let bounded = divergence_scan(&Policy::Constant(0), &History::empty(), &half(), ScanDirection::Above, 3, &[stage], &Geometric, &nat_alpha());
        assert!(bounded.is_err());
    }

    #[test]
    fn small_scan_finds_a_verified_term() {
        let stage = ScanStage {
            theta_count: 1024,
            theta_budget: budget(64),
            env_budget: budget(128),
            cutoff: 64,
            horizon: 1,
        };
        let r = divergence_scan(&Policy::Constant(0), &History::empty(), &UtilitySpec::FirstPerception, ScanDirection::Above, 1, &[stage], &Geometric, &nat_alpha())
            .unwrap();
        assert!(r.complete);
        let w = &r.records[0];
        // exp2 six times from an empty stack: 2^65536 at index 515.
        assert_eq!(w.env_index, ProgramIndex::from(515));
        assert_eq!(w.v.bits(), 65537);
        assert_eq!(w.term_lower, Rational::from_integer(BigInt::from(w.v.clone())) * pow2_neg(516));
    }
}
