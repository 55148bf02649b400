//! Utilities over perception sequences, known only through computable bounds.
//!
//! A spec gives, for every finite prefix `s`, a lower bound `u_lower(s)` and an
//! upper bound `u_upper(s)` on the utility of every admissible infinite
//! continuation of `s`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::dovetail::{dovetail_search, Dovetail, TaskFamily};
use crate::error::{Error, Result};
use crate::minilang::{Alphabets, Instr, PerceptionMode, Program};
use crate::num::{format_rational, parse_rational, rational_from_natural, ExtRational, Rational};
use crate::Natural;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum UtilitySpec {
    /// `sum_{k >= 1} gamma^k min(x_k, 1)`.
    DiscountedReward { gamma: Rational },
    /// `x_1`, over the naturals.
    FirstPerception,
    /// Number of ones before the first zero, over `{0, 1}` sequences that contain a zero.
    OnesRunLength,
    /// `x_1 / 2` for even `x_1`, `-(x_1 + 1) / 2` for odd `x_1`: unbounded both ways.
    ZigZag,
    Negated(Box<UtilitySpec>),
}

impl UtilitySpec {
    pub fn discounted(gamma: Rational) -> Result<Self> {
        if gamma <= Rational::zero() || gamma >= Rational::one() {
            return Err(Error::Utility {
                utility: "discounted".into(),
                msg: format!("discount {} is not in (0, 1)", format_rational(&gamma)),
            });
        }
        Ok(UtilitySpec::DiscountedReward { gamma })
    }

    pub fn negated(self) -> Self {
        match self {
            UtilitySpec::Negated(inner) => *inner,
            other => UtilitySpec::Negated(Box::new(other)),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Checks the alphabet this spec is defined over.
    pub fn check_alphabets(&self, alphabets: &Alphabets) -> Result<()> {
        let mode = alphabets.perception();
        let ok = match self {
            UtilitySpec::DiscountedReward { .. } => true,
            UtilitySpec::FirstPerception | UtilitySpec::ZigZag => mode == PerceptionMode::Naturals,
            UtilitySpec::OnesRunLength => mode == PerceptionMode::Finite(2),
            UtilitySpec::Negated(inner) => return inner.check_alphabets(alphabets),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Utility { utility: self.name(), msg: format!("not defined for perception mode {mode:?}") })
        }
    }

    pub fn unbounded_above(&self) -> bool {
        match self {
            UtilitySpec::DiscountedReward { .. } => false,
            UtilitySpec::FirstPerception | UtilitySpec::OnesRunLength | UtilitySpec::ZigZag => true,
            UtilitySpec::Negated(inner) => inner.unbounded_below(),
        }
    }

    pub fn unbounded_below(&self) -> bool {
        match self {
            UtilitySpec::ZigZag => true,
            UtilitySpec::Negated(inner) => inner.unbounded_above(),
            _ => false,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !self.unbounded_above() && !self.unbounded_below()
    }

    /// Infimum of `U` over all admissible sequences.
    pub fn global_inf(&self) -> ExtRational {
        match self {
            UtilitySpec::ZigZag => ExtRational::NegInf,
            UtilitySpec::Negated(inner) => inner.global_sup().neg(),
            _ => ExtRational::zero(),
        }
    }

    /// Supremum of `U` over all admissible sequences.
    pub fn global_sup(&self) -> ExtRational {
        match self {
            UtilitySpec::DiscountedReward { gamma } => {
                ExtRational::Finite(gamma / (Rational::one() - gamma))
            }
            UtilitySpec::Negated(inner) => inner.global_inf().neg(),
            _ => ExtRational::PosInf,
        }
    }

    pub fn u_lower(&self, s: &[Natural]) -> ExtRational {
        self.bounds(s).0
    }

    pub fn u_upper(&self, s: &[Natural]) -> ExtRational {
        self.bounds(s).1
    }

    /// `(u_lower(s), u_upper(s))`, clipped to the global range of `U`.
    pub fn bounds(&self, s: &[Natural]) -> (ExtRational, ExtRational) {
        let (lo, hi) = self.raw_bounds(s);
        (lo.max(self.global_inf()), hi.min(self.global_sup()))
    }

    fn raw_bounds(&self, s: &[Natural]) -> (ExtRational, ExtRational) {
        use ExtRational::*;
        match self {
            UtilitySpec::DiscountedReward { gamma } => {
                let mut w = Rational::one();
                let mut partial = Rational::zero();
                for x in s {
                    w *= gamma;
                    if !x.is_zero() {
                        partial += &w;
                    }
                }
                // w = gamma^|s|; the rest is at most gamma^(|s|+1) / (1 - gamma).
                let rest = &w * gamma / (Rational::one() - gamma);
                let upper = &partial + rest;
                (Finite(partial), Finite(upper))
            }
            UtilitySpec::FirstPerception => match s.first() {
                Some(x) => {
                    let v = rational_from_natural(x);
                    (Finite(v.clone()), Finite(v))
                }
                None => (NegInf, PosInf),
            },
            UtilitySpec::ZigZag => match s.first() {
                Some(x) => {
                    let v = Rational::from_integer(zigzag(x));
                    (Finite(v.clone()), Finite(v))
                }
                None => (NegInf, PosInf),
            },
            UtilitySpec::OnesRunLength => {
                let ones = s.iter().take_while(|x| x.is_one()).count();
                let v = Finite(Rational::from_integer(ones.into()));
                if ones < s.len() {
                    (v.clone(), v)
                } else {
                    (v, PosInf)
                }
            }
            UtilitySpec::Negated(inner) => {
                let (lo, hi) = inner.bounds(s);
                (hi.neg(), lo.neg())
            }
        }
    }

    /// `U` of the eventually constant sequence `s c c c ...`.
    pub fn value_eventually_constant(&self, s: &[Natural], c: &Natural) -> Option<ExtRational> {
        match self {
            UtilitySpec::DiscountedReward { gamma } => {
                let (lo, _) = self.bounds(s);
                let lo = lo.finite()?.clone();
                let tail = if c.is_zero() {
                    Rational::zero()
                } else {
                    let mut w = Rational::one();
                    for _ in 0..=s.len() {
                        w *= gamma;
                    }
                    w / (Rational::one() - gamma)
                };
                Some(ExtRational::Finite(lo + tail))
            }
            UtilitySpec::FirstPerception | UtilitySpec::ZigZag => {
                let first = s.first().unwrap_or(c);
                Some(self.bounds(std::slice::from_ref(first)).0)
            }
            UtilitySpec::OnesRunLength => {
                if s.iter().any(|x| x.is_zero()) || c.is_zero() {
                    Some(self.bounds(&[s, &[Natural::zero()]].concat()).0)
                } else {
                    None
                }
            }
            UtilitySpec::Negated(inner) => inner.value_eventually_constant(s, c).map(|v| v.neg()),
        }
    }
}

/// `x / 2` for even `x`, `-(x + 1) / 2` for odd `x`.
pub fn zigzag(x: &Natural) -> BigInt {
    let half = BigInt::from(x >> 1u8);
    if x.is_even() {
        half
    } else {
        -(half + BigInt::one())
    }
}

impl fmt::Display for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilitySpec::DiscountedReward { gamma } => write!(f, "discounted:{}", format_rational(gamma)),
            UtilitySpec::FirstPerception => f.write_str("first"),
            UtilitySpec::OnesRunLength => f.write_str("ones-run"),
            UtilitySpec::ZigZag => f.write_str("zigzag"),
            UtilitySpec::Negated(inner) => write!(f, "neg:{inner}"),
        }
    }
}

impl FromStr for UtilitySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("neg:") {
            return Ok(inner.parse::<UtilitySpec>()?.negated());
        }
        if let Some(g) = s.strip_prefix("discounted:") {
            return UtilitySpec::discounted(parse_rational(g)?);
        }
        match s {
            "first" => Ok(UtilitySpec::FirstPerception),
            "ones-run" => Ok(UtilitySpec::OnesRunLength),
            "zigzag" => Ok(UtilitySpec::ZigZag),
            _ => Err(Error::Parse(format!("unknown utility {s:?}"))),
        }
    }
}

/// Sequences whose first `n` perceptions are fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixDomain {
    pub required: Vec<Natural>,
}

impl PrefixDomain {
    pub fn new(required: Vec<Natural>) -> Self {
        PrefixDomain { required }
    }

    pub fn admits(&self, s: &[Natural]) -> bool {
        s.len() >= self.required.len() && s[..self.required.len()] == self.required[..]
    }
}

/// The `i`-th extension string in a fixed enumeration of all finite strings.
///
/// `c_0` is empty and `i = 2^a (2b + 1)` is token `b` followed by `c_a`. Over
/// the naturals a token is one symbol. Over `{0, .., n-1}` token `b` is symbol
/// `b mod n` repeated `2^(b div n)` times, so long runs have small indices.
/// Returns `None` if the string would be longer than `max_len`.
pub fn extension(i: u64, mode: PerceptionMode, max_len: u64) -> Option<Vec<Natural>> {
    let tokens = tokens(i);
    if extension_len(&tokens, mode) > max_len {
        return None;
    }
    let mut out = Vec::new();
    for b in tokens {
        match mode {
            PerceptionMode::Naturals => out.push(Natural::from(b)),
            PerceptionMode::Finite(n) => {
                let sym = Natural::from(b % n as u64);
                let run = 1usize << (b / n as u64);
                out.extend(std::iter::repeat_n(sym, run));
            }
        }
    }
    Some(out)
}

/// Inverse of the token split: the index whose tokens are `tokens`.
pub fn token_index(tokens: &[u64]) -> BigUint {
    tokens.iter().rev().fold(BigUint::zero(), |rest, &b| {
        let a = u64::try_from(&rest).expect("index too large to be a shift");
        (BigUint::from(2 * b as u128 + 1)) << a
    })
}

fn tokens(mut i: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while i > 0 {
        let a = i.trailing_zeros();
        out.push((i >> a) >> 1);
        i = a as u64;
    }
    out
}

fn extension_len(tokens: &[u64], mode: PerceptionMode) -> u64 {
    match mode {
        PerceptionMode::Naturals => tokens.len() as u64,
        PerceptionMode::Finite(n) => tokens
            .iter()
            .map(|b| 1u64.checked_shl((b / n as u64).min(64) as u32).unwrap_or(u64::MAX))
            .fold(0u64, |a, r| a.saturating_add(r)),
    }
}

struct HeavenTasks<'a> {
    spec: &'a UtilitySpec,
    dom: &'a PrefixDomain,
    mode: PerceptionMode,
    threshold: Rational,
}

impl TaskFamily for HeavenTasks<'_> {
    type Output = Vec<Natural>;

    /// Evaluating `u_lower` on a candidate costs one step per symbol plus one.
    fn simulate(&self, index: u64, steps: u64) -> Option<Vec<Natural>> {
        let budget = steps.checked_sub(1 + self.dom.required.len() as u64)?;
        let ext = extension(index, self.mode, budget)?;
        Some([self.dom.required.as_slice(), &ext].concat())
    }

    fn accept(&self, _: u64, s: &Vec<Natural>) -> bool {
        self.spec.u_lower(s) >= ExtRational::Finite(self.threshold.clone())
    }
}

/// Cell cap for [`heaven_finder`] when the caller has no better figure.
pub const DEFAULT_HEAVEN_CAP: u64 = 1 << 24;

/// A prefix in the domain whose utility lower bound is at least `m`.
///
/// Dovetails over the extension enumeration, visiting at most `cap` cells.
pub fn heaven_finder(
    spec: &UtilitySpec,
    dom: &PrefixDomain,
    m: &BigInt,
    cap: u64,
    alphabets: &Alphabets,
) -> Result<Vec<Natural>> {
    spec.check_alphabets(alphabets)?;
    let tasks = HeavenTasks {
        spec,
        dom,
        mode: alphabets.perception(),
        threshold: Rational::from_integer(m.clone()),
    };
    match dovetail_search(&tasks, cap) {
        Dovetail::Found { output, .. } => Ok(output),
        Dovetail::Exhausted { cells } => Err(Error::Exhausted { cap: cells }),
    }
}

/// Lowest-index prefix with utility lower bound at most `-m`.
pub fn hell_finder(
    spec: &UtilitySpec,
    dom: &PrefixDomain,
    m: &BigInt,
    cap: u64,
    alphabets: &Alphabets,
) -> Result<Vec<Natural>> {
    let flipped = spec.clone().negated();
    heaven_finder(&flipped, dom, m, cap, alphabets)
}

/// An environment that outputs `s_k` on action strings of length `k <= |s|`
/// and `c` afterwards, whatever the actions are.
pub fn pad_to_sequence_program(s: &[Natural], c: &Natural) -> Program {
    let n = s.len();
    // Layout: n four-instruction tests, the padding exit, then n exits.
    let exits = 4 * n + 2;
    let mut code = Vec::with_capacity(6 * n + 2);
    for k in 1..=n {
        code.push(Instr::Len);
        code.push(Instr::Push(Natural::from(k)));
        code.push(Instr::Sub);
        code.push(Instr::Jz(exits + 2 * (k - 1)));
    }
    code.push(Instr::Push(c.clone()));
    code.push(Instr::Halt);
    for x in s {
        code.push(Instr::Push(x.clone()));
        code.push(Instr::Halt);
    }
    Program::from_instrs(code).expect("targets inside the code")
}

/// Sign of an extended rational, treating zero as neither.
pub fn sign(x: &ExtRational) -> i8 {
    match x {
        ExtRational::NegInf => -1,
        ExtRational::PosInf => 1,
        ExtRational::Finite(q) if q.is_positive() => 1,
        ExtRational::Finite(q) if q.is_negative() => -1,
        _ => 0,
    }
}

/// Convenience: naturals from machine integers.
pub fn naturals(v: &[u64]) -> Vec<Natural> {
    v.iter().map(|&x| BigUint::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::gamma;
    use crate::minilang::StepBudget;

    fn q(s: &str) -> ExtRational {
        s.parse().unwrap()
    }

    fn nat_alpha() -> Alphabets {
        Alphabets::new(2, PerceptionMode::Naturals).unwrap()
    }

    fn bit_alpha() -> Alphabets {
        Alphabets::new(2, PerceptionMode::Finite(2)).unwrap()
    }

    #[test]
    fn discounted_bounds() {
        let u = UtilitySpec::discounted(parse_rational("1/2").unwrap()).unwrap();
        assert_eq!(u.bounds(&naturals(&[1, 1])), (q("3/4"), q("1")));
        assert_eq!(u.bounds(&[]), (q("0"), q("1")));
        // Rewards are capped at one.
        assert_eq!(u.u_lower(&naturals(&[5, 0, 9])), q("5/8"));
        assert!(UtilitySpec::discounted(parse_rational("1").unwrap()).is_err());
    }

    #[test]
    fn first_and_ones_bounds() {
        let f = UtilitySpec::FirstPerception;
        assert_eq!(f.bounds(&naturals(&[7, 3])), (q("7"), q("7")));
        assert_eq!(f.bounds(&[]), (ExtRational::zero(), ExtRational::PosInf));
        assert_eq!(UtilitySpec::ZigZag.bounds(&[]), (ExtRational::NegInf, ExtRational::PosInf));
        let o = UtilitySpec::OnesRunLength;
        assert_eq!(o.bounds(&naturals(&[1, 1, 1])), (q("3"), ExtRational::PosInf));
        assert_eq!(o.bounds(&naturals(&[1, 1, 0, 1])), (q("2"), q("2")));
        let n = UtilitySpec::FirstPerception.negated();
        assert_eq!(n.bounds(&naturals(&[7])), (q("-7"), q("-7")));
        assert!(n.unbounded_below() && !n.unbounded_above());
        assert_eq!(n.clone().negated(), UtilitySpec::FirstPerception);
    }

    #[test]
    fn zigzag_covers_the_integers() {
        let got: Vec<i64> = (0u64..7).map(|x| zigzag(&Natural::from(x)).try_into().unwrap()).collect();
        assert_eq!(got, vec![0, -1, 1, -2, 2, -3, 3]);
    }

    #[test]
    fn spec_names_roundtrip() {
        for s in ["discounted:1/2", "first", "ones-run", "zigzag", "neg:first", "neg:zigzag"] {
            assert_eq!(s.parse::<UtilitySpec>().unwrap().to_string(), s);
        }
        assert!("nope".parse::<UtilitySpec>().is_err());
    }

    #[test]
    fn token_split_is_a_bijection() {
        for i in 0u64..100_000 {
            assert_eq!(token_index(&tokens(i)), BigUint::from(i));
        }
        // Any token string has an index, so every string is enumerated.
        assert_eq!(token_index(&[0, 1, 0]), BigUint::from(64u8));
        assert_eq!(extension(2 * 9 + 1, PerceptionMode::Naturals, 10), Some(naturals(&[9])));
        // Token 2 * 10 + 1 over {0, 1} is a run of 2^10 ones.
        let run = extension(2 * 21 + 1, PerceptionMode::Finite(2), 1 << 12).unwrap();
        assert_eq!(run, vec![Natural::one(); 1024]);
        assert_eq!(extension(2 * 21 + 1, PerceptionMode::Finite(2), 1000), None);
    }

    #[test]
    fn heaven_finder_small_cases() {
        let a = nat_alpha();
        let dom = PrefixDomain::default();
        let s = heaven_finder(&UtilitySpec::FirstPerception, &dom, &BigInt::from(100), 1 << 20, &a).unwrap();
        assert!(s[0] >= Natural::from(100u8));
        let b = bit_alpha();
        let s = heaven_finder(&UtilitySpec::OnesRunLength, &dom, &BigInt::from(5), 1 << 20, &b).unwrap();
        assert!(UtilitySpec::OnesRunLength.u_lower(&s) >= q("5"));
        // Already satisfied by the required prefix.
        let dom = PrefixDomain::new(naturals(&[9]));
        let s = heaven_finder(&UtilitySpec::FirstPerception, &dom, &BigInt::from(3), 10, &a).unwrap();
        assert_eq!(s, naturals(&[9]));
        assert!(matches!(
            heaven_finder(&UtilitySpec::FirstPerception, &dom, &BigInt::from(30), 1000, &a),
            Err(Error::Exhausted { cap: 1000 })
        ));
        let s = hell_finder(&UtilitySpec::ZigZag, &PrefixDomain::default(), &BigInt::from(4), 1 << 16, &a).unwrap();
        assert!(UtilitySpec::ZigZag.u_upper(&s) <= q("-4"));
    }

    #[test]
    fn padded_program_replays_then_pads() {
        let p = pad_to_sequence_program(&naturals(&[3, 1]), &Natural::zero());
        let g = gamma(&p, &[1, 0, 1, 1], StepBudget::new(100).unwrap(), &nat_alpha()).unwrap();
        assert_eq!(g.perceptions, naturals(&[3, 1, 0, 0]));
        assert!(p.is_certified_total());
        let c = pad_to_sequence_program(&[], &Natural::from(6u8));
        assert_eq!(c.len(), 2);
    }
}
