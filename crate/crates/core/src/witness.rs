//! Budgeted busy-beaver bounds and the witness environments built from them.
//!
//! `theta_k` is the minilang program with index `k` run on the empty input;
//! `theta_k(0)` is its output. `B_T(n)` is the largest such output over
//! `k <= n` among runs that halt within `T` steps, a lower bound on the true
//! (uncomputable) `B(n)`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{PosteriorTable, Prior};
use crate::interaction::{w_p, History, Policy};
use crate::minilang::{decode, encode, execute, Alphabets, Instr, Program, ProgramIndex, StepBudget, Tape};
use crate::num::{serde_natural, serde_rational, ExtRational, Rational};
use crate::par;
use crate::utility::{heaven_finder, hell_finder, pad_to_sequence_program, PrefixDomain, UtilitySpec};
use crate::Natural;

/// `theta_k(0)` when it halts within `budget`.
pub fn theta_output(k: u64, budget: StepBudget) -> Option<Natural> {
    let p = decode(&ProgramIndex::from(k));
    execute(&p, Tape::Actions(&[]), budget).outcome.halted().cloned()
}

/// `theta_k(0)` for every `k < count`, in index order.
pub fn theta_outputs(count: u64, budget: StepBudget) -> Vec<Option<Natural>> {
    par::map_range(count as usize, |k| theta_output(k as u64, budget))
}

/// `B_T(n)`, or `None` if no `theta_k` with `k <= n` halts within `T`.
pub fn busy_beaver_lb(n: u64, budget: StepBudget) -> Option<Natural> {
    theta_outputs(n + 1, budget).into_iter().flatten().max()
}

/// One row of the running maximum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BbRow {
    pub n: u64,
    pub value: Option<Natural>,
    /// Smallest `k <= n` attaining `value`.
    pub argmax: Option<u64>,
}

/// `B_T(n)` with its smallest maximizer for every `n < outputs.len()`.
pub fn bb_rows(outputs: &[Option<Natural>]) -> Vec<BbRow> {
    let mut best: Option<(&Natural, u64)> = None;
    outputs
        .iter()
        .enumerate()
        .map(|(n, out)| {
            if let Some(v) = out {
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, n as u64));
                }
            }
            BbRow { n: n as u64, value: best.map(|(v, _)| v.clone()), argmax: best.map(|(_, k)| k) }
        })
        .collect()
}

/// Smallest `k <= j` with `theta_k(0) = B_T(j)`.
pub fn argmax_u(j: u64, budget: StepBudget) -> Result<u64> {
    let rows = bb_rows(&theta_outputs(j + 1, budget));
    rows.last()
        .and_then(|r| r.argmax)
        .ok_or(Error::NoHaltingWitness { n: j, budget: budget.max_steps() })
}

/// A point where the running maximum strictly increases: `u_j = j` and `v = B_T(j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub j: u64,
    pub u_j: u64,
    pub v: Natural,
}

/// The strict records of `B_T` over the given outputs.
pub fn records(outputs: &[Option<Natural>]) -> Vec<Record> {
    let mut out: Vec<Record> = Vec::new();
    for (k, v) in outputs.iter().enumerate() {
        if let Some(v) = v {
            if out.last().is_none_or(|r| *v > r.v) {
                out.push(Record { j: k as u64, u_j: k as u64, v: v.clone() });
            }
        }
    }
    out
}

/// Which tail of the utility a witness pushes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
}

impl Direction {
    fn flip(self) -> Direction {
        match self {
            Direction::Above => Direction::Below,
            Direction::Below => Direction::Above,
        }
    }
}

/// Whether `spec` is unbounded in `dir` on sequences extending `h`.
pub fn unbounded_on(spec: &UtilitySpec, h: &History, dir: Direction) -> bool {
    let free = match spec {
        UtilitySpec::Negated(inner) => return unbounded_on(inner, h, dir.flip()),
        UtilitySpec::DiscountedReward { .. } => false,
        UtilitySpec::FirstPerception | UtilitySpec::ZigZag => h.is_empty(),
        UtilitySpec::OnesRunLength => h.perceptions().iter().all(|x| x.is_one()),
    };
    free && match dir {
        Direction::Above => spec.unbounded_above(),
        Direction::Below => spec.unbounded_below(),
    }
}

/// Literal witness: an environment replaying `heaven_finder(spec, D(h), v)`
/// (or the mirror image for `Below`), then emitting `c` forever.
pub fn synthesize_g(
    v: &BigInt,
    h: &History,
    spec: &UtilitySpec,
    dir: Direction,
    c: &Natural,
    cap: u64,
    alphabets: &Alphabets,
) -> Result<ProgramIndex> {
    let dom = PrefixDomain::new(h.perceptions().to_vec());
    let s = match dir {
        Direction::Above => heaven_finder(spec, &dom, v, cap, alphabets)?,
        Direction::Below => hell_finder(spec, &dom, v, cap, alphabets)?,
    };
    Ok(encode(&pad_to_sequence_program(&s, c)))
}

/// Code that turns the value `v` on top of the stack into the output for
/// input lengths past the history, so that the utility of the resulting
/// sequence is at least `v` (or at most `-v` for `Below`).
fn output_template(spec: &UtilitySpec, dir: Direction, n: usize) -> Result<Vec<Instr>> {
    let refuse = || Error::Utility {
        utility: spec.name(),
        msg: format!("no witness template for direction {dir:?}"),
    };
    Ok(match (spec, dir) {
        (UtilitySpec::Negated(inner), d) => return output_template(inner, d.flip(), n),
        (UtilitySpec::FirstPerception, Direction::Above) => vec![],
        (UtilitySpec::ZigZag, Direction::Above) => vec![Instr::Dup, Instr::Add, Instr::Halt],
        (UtilitySpec::ZigZag, Direction::Below) => {
            vec![Instr::Dup, Instr::Add, Instr::Push(Natural::one()), Instr::Add, Instr::Halt]
        }
        // 1 while k <= n + v, then 0. Targets are relative and fixed up later.
        (UtilitySpec::OnesRunLength, Direction::Above) => vec![
            Instr::Push(Natural::from(n + 1)),
            Instr::Add,
            Instr::Len,
            Instr::Sub,
            Instr::Jz(7),
            Instr::Push(Natural::one()),
            Instr::Halt,
            Instr::Push(Natural::zero()),
            Instr::Halt,
        ],
        _ => return Err(refuse()),
    })
}

/// The environment `G(k)`: on input lengths up to `|h|` it replays the history
/// perceptions; past that it runs `theta_k` as if on the empty input and
/// emits the template output for its value.
///
/// When nothing has to be wrapped around `theta_k` (empty history, identity
/// template, no input instructions) this is `theta_k` itself, so the witness
/// keeps `theta_k`'s short index.
pub fn theta_g(k: &ProgramIndex, h: &History, spec: &UtilitySpec, dir: Direction) -> Result<Program> {
    if !unbounded_on(spec, h, dir) {
        return Err(Error::Utility {
            utility: spec.name(),
            msg: format!("not unbounded {dir:?} on sequences extending the history"),
        });
    }
    let theta = decode(k);
    let n = h.len();
    let template = output_template(spec, dir, n)?;
    let prelude = if n == 0 { 0 } else { 4 };
    let wrapped = prelude > 0 || !template.is_empty();
    let start = prelude;
    let m = theta.len();
    let after = start + m + usize::from(wrapped);

    let mut code = Vec::new();
    let table = after + template.len();
    if n > 0 {
        code.extend([Instr::Len, Instr::Push(Natural::from(n)), Instr::Sub, Instr::Jz(table)]);
    }
    for (pc, ins) in theta.instrs().iter().enumerate() {
        code.push(match ins {
            Instr::Jz(t) => Instr::Jz(start + t),
            Instr::Jmp(t) => Instr::Jmp(start + t),
            Instr::Halt if !template.is_empty() => Instr::Jmp(after),
            Instr::Read | Instr::Len => Instr::Push(Natural::zero()),
            Instr::Next => Instr::Jmp(start + pc + 1),
            other => other.clone(),
        });
    }
    if wrapped {
        code.push(Instr::Jmp(start));
    }
    for ins in template {
        code.push(match ins {
            Instr::Jz(t) => Instr::Jz(after + t),
            other => other,
        });
    }
    if n > 0 {
        let exits = table + 4 * n;
        for j in 1..=n {
            code.extend([Instr::Len, Instr::Push(Natural::from(j)), Instr::Sub, Instr::Jz(exits + 2 * (j - 1))]);
        }
        for x in h.perceptions() {
            code.extend([Instr::Push(x.clone()), Instr::Halt]);
        }
    }
    // A Next at the very end of theta jumps to `start + m`, which is the wrap
    // jump when there is one and the end of the code otherwise.
    let len = code.len();
    for ins in &mut code {
        if let Instr::Jmp(t) = ins {
            if *t >= len {
                *t = 0;
            }
        }
    }
    Program::from_instrs(code)
}

/// `ceil(max_{k <= j} 1 / rho(G(k)))`.
pub fn rho_bar(j: usize, trace: &[ProgramIndex], prior: &dyn Prior) -> Result<BigUint> {
    if trace.len() <= j {
        return Err(Error::Domain(format!("trace has {} entries, need {}", trace.len(), j + 1)));
    }
    let mut best = BigUint::zero();
    for idx in &trace[..=j] {
        let w = prior
            .weight(idx.value())
            .ok_or_else(|| Error::Domain(format!("prior weight of index {idx} is not representable")))?;
        let r = (w.denom() + w.numer() - BigInt::one()) / w.numer();
        let r = r.to_biguint().expect("positive");
        if r > best {
            best = r;
        }
    }
    Ok(best)
}

/// Certified bounds on one series term `U(W_p(q)) * P({q} | h)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermBounds {
    pub lower: ExtRational,
    pub upper: ExtRational,
    pub u_lower: ExtRational,
    pub u_upper: ExtRational,
    pub post_lower: Rational,
}

/// Bounds on the term of the consistent environment `env`.
///
/// `U` is bracketed by `u_lower`/`u_upper` of the rolled-out prefix and the
/// posterior by the table's interval; each product takes whichever posterior
/// end keeps it sound.
#[allow(clippy::too_many_arguments)]
pub fn term_magnitude(
    env: &ProgramIndex,
    p: &Policy,
    h: &History,
    spec: &UtilitySpec,
    table: &PosteriorTable,
    horizon: usize,
    budget: StepBudget,
    alphabets: &Alphabets,
) -> Result<TermBounds> {
    let (post_lower, post_upper) = table
        .posterior_bounds(env.value())
        .ok_or_else(|| Error::Domain(format!("index {env} is not a consistent entry of the table")))?;
    let w = w_p(&decode(env), p, h, horizon, budget, alphabets)?;
    let (u_lower, u_upper) = spec.bounds(&w);
    Ok(term_from_bounds(u_lower, u_upper, post_lower, &post_upper))
}

pub(crate) fn term_from_bounds(
    u_lower: ExtRational,
    u_upper: ExtRational,
    post_lower: Rational,
    post_upper: &Rational,
) -> TermBounds {
    let lower = if u_lower >= ExtRational::zero() { u_lower.scale(&post_lower) } else { u_lower.scale(post_upper) };
    let upper = if u_upper <= ExtRational::zero() { u_upper.scale(&post_lower) } else { u_upper.scale(post_upper) };
    TermBounds { lower, upper, u_lower, u_upper, post_lower }
}

/// One verified series term with `|term| >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub j: u64,
    pub u_j: u64,
    #[serde(with = "serde_natural")]
    pub v: Natural,
    pub env_index: ProgramIndex,
    pub direction: Direction,
    /// Certified lower bound on `|term|`.
    #[serde(with = "serde_rational")]
    pub term_lower: Rational,
}

impl WitnessRecord {
    pub fn verified(&self) -> bool {
        self.term_lower >= Rational::one()
    }
}

/// `|bound|` when the bound has the sign that `dir` asks for.
pub(crate) fn magnitude(b: &TermBounds, dir: Direction) -> Option<Rational> {
    match dir {
        Direction::Above => b.lower.finite().filter(|q| !q.is_negative()).cloned(),
        Direction::Below => b.upper.finite().filter(|q| !q.is_positive()).map(|q| -q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{build_posterior, classify, Classification, Geometric};
    use crate::interaction::gamma;
    use crate::minilang::{parse_asm, PerceptionMode};
    use crate::num::parse_rational;
    use crate::utility::naturals;

    fn budget(n: u64) -> StepBudget {
        StepBudget::new(n).unwrap()
    }

    fn nat_alpha() -> Alphabets {
        Alphabets::new(2, PerceptionMode::Naturals).unwrap()
    }

    #[test]
    fn running_max_and_argmax() {
        let outs = vec![None, Some(Natural::from(3u8)), Some(Natural::from(1u8)), Some(Natural::from(3u8)), None];
        let rows = bb_rows(&outs);
        assert_eq!(rows[0].value, None);
        assert_eq!(rows[4].value, Some(Natural::from(3u8)));
        assert_eq!(rows[4].argmax, Some(1));
        assert_eq!(records(&outs).len(), 1);
        assert!(matches!(argmax_u(0, budget(10)), Err(Error::NoHaltingWitness { .. })));
    }

    #[test]
    fn argmax_attains_the_bound() {
        for j in [20u64, 100, 300] {
            let k = argmax_u(j, budget(100)).unwrap();
            assert!(k <= j);
            assert_eq!(theta_output(k, budget(100)), busy_beaver_lb(j, budget(100)));
        }
    }

    #[test]
    fn literal_witness_replays_a_high_prefix() {
        let a = nat_alpha();
        let idx = synthesize_g(
            &BigInt::from(50),
            &History::empty(),
            &UtilitySpec::FirstPerception,
            Direction::Above,
            &Natural::zero(),
            1 << 20,
            &a,
        )
        .unwrap();
        let env = decode(&idx);
        assert_eq!(classify(&env, &History::empty(), budget(100), &a).unwrap(), Classification::Consistent);
        let w = w_p(&env, &Policy::Constant(0), &History::empty(), 3, budget(100), &a).unwrap();
        assert!(UtilitySpec::FirstPerception.u_lower(&w) >= "50".parse().unwrap());
    }

    #[test]
    fn theta_witness_is_theta_itself_when_nothing_wraps() {
        let p = parse_asm("exp2\nexp2\nexp2\nhalt").unwrap();
        let k = encode(&p);
        let g = theta_g(&k, &History::empty(), &UtilitySpec::FirstPerception, Direction::Above).unwrap();
        assert_eq!(g, p);
    }

    #[test]
    fn theta_witness_with_history_and_template() {
        let a = nat_alpha();
        // theta: reads input (sanitized to 0), pushes 5, adds.
        let theta = parse_asm("read\nnext\npush 5\nadd\nhalt").unwrap();
        let k = encode(&theta);
        let g = theta_g(&k, &History::empty(), &UtilitySpec::ZigZag, Direction::Below).unwrap();
        let w = w_p(&g, &Policy::Constant(1), &History::empty(), 2, budget(100), &a).unwrap();
        // 2 * 5 + 1 = 11 -> -6
        assert_eq!(w, naturals(&[11, 11]));
        let bits = Alphabets::new(2, PerceptionMode::Finite(2)).unwrap();
        let h = History::new(vec![0, 1], naturals(&[1, 1])).unwrap();
        let small = encode(&parse_asm("push 3\nhalt").unwrap());
        let g = theta_g(&small, &h, &UtilitySpec::OnesRunLength, Direction::Above).unwrap();
        let out = gamma(&g, &[0, 1, 0, 0, 0, 0, 1], budget(200), &bits).unwrap();
        assert_eq!(out.perceptions, naturals(&[1, 1, 1, 1, 1, 0, 0]));
        assert!(theta_g(&small, &h, &UtilitySpec::FirstPerception, Direction::Above).is_err());
    }

    #[test]
    fn rho_bar_is_a_running_max() {
        let t = vec![ProgramIndex::from(3), ProgramIndex::from(1), ProgramIndex::from(5)];
        assert_eq!(rho_bar(0, &t, &Geometric).unwrap(), BigUint::from(8u8));
        assert_eq!(rho_bar(1, &t, &Geometric).unwrap(), BigUint::from(8u8));
        assert_eq!(rho_bar(2, &t, &Geometric).unwrap(), BigUint::from(32u8));
        let q = crate::hypothesis::Quadratic;
        // 1 / rho(1) = 6
        assert_eq!(rho_bar(1, &t, &q).unwrap(), BigUint::from(20u8));
    }

    #[test]
    fn term_products() {
        let b = term_from_bounds(
            "16".parse().unwrap(),
            "16".parse().unwrap(),
            parse_rational("1/8").unwrap(),
            &parse_rational("1/4").unwrap(),
        );
        assert_eq!(b.lower, "2".parse().unwrap());
        let z = term_from_bounds(ExtRational::zero(), ExtRational::zero(), parse_rational("1/8").unwrap(), &Rational::one());
        assert_eq!(z.lower, ExtRational::zero());
        let a = nat_alpha();
        let table = build_posterior(&History::empty(), 20, budget(100), &Geometric, &a).unwrap();
        let env = encode(&parse_asm("push 9\nhalt").unwrap());
        assert!(term_magnitude(&env, &Policy::Constant(0), &History::empty(), &UtilitySpec::FirstPerception, &table, 1, budget(100), &a).is_err());
    }
}
