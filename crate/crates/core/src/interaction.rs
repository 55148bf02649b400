//! The agent/environment loop.
//!
//! In cycle `k` the agent emits `y_k = p(y_1..y_{k-1}, x_1..x_{k-1})` and the
//! environment answers `x_k = q(y_1..y_k)`. Futures are only ever materialized
//! to a finite horizon.

use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minilang::{execute, run, Action, Alphabets, Outcome, Program, StepBudget, Tape};
use crate::Natural;

/// Paired action and perception strings of equal length.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct History {
    actions: Vec<Action>,
    perceptions: Vec<Natural>,
}

impl History {
    pub fn new(actions: Vec<Action>, perceptions: Vec<Natural>) -> Result<Self> {
        if actions.len() != perceptions.len() {
            return Err(Error::Parse(format!(
                "history has {} actions but {} perceptions",
                actions.len(),
                perceptions.len()
            )));
        }
        Ok(History { actions, perceptions })
    }

    pub fn empty() -> Self {
        History::default()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn perceptions(&self) -> &[Natural] {
        &self.perceptions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn validate(&self, alphabets: &Alphabets) -> Result<()> {
        alphabets.check_actions(&self.actions)?;
        match self.perceptions.iter().position(|x| !alphabets.is_perception(x)) {
            Some(position) => Err(Error::InvalidPerception {
                value: self.perceptions[position].to_string(),
                position,
            }),
            None => Ok(()),
        }
    }
}

/// Text form: the action row, then the perception row, whitespace separated.
impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |v: Vec<String>| v.join(" ");
        writeln!(f, "{}", row(self.actions.iter().map(|a| a.to_string()).collect()))?;
        writeln!(f, "{}", row(self.perceptions.iter().map(|x| x.to_string()).collect()))
    }
}

impl FromStr for History {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let actions = lines
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(|w| w.parse::<Action>().map_err(|_| Error::Parse(format!("bad action {w:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let perceptions = lines
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(|w| w.parse::<Natural>().map_err(|_| Error::Parse(format!("bad perception {w:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Parse("history file has more than two rows".into()));
        }
        History::new(actions, perceptions)
    }
}

/// How the agent picks its next action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Policy {
    Constant(Action),
    /// Plays the script in order, then repeats its last action.
    Scripted(Vec<Action>),
    /// A program reading the interleaved history `y_1 x_1 y_2 x_2 ...`; its
    /// output is reduced modulo `|Y|`, and `fallback` is played when it does
    /// not halt within `budget`.
    Program { program: Program, budget: StepBudget, fallback: Action },
}

impl Policy {
    pub fn scripted(script: Vec<Action>) -> Result<Self> {
        if script.is_empty() {
            return Err(Error::Parse("scripted policy needs at least one action".into()));
        }
        Ok(Policy::Scripted(script))
    }

    /// Checks that every action this policy can emit is in the alphabet.
    pub fn validate(&self, alphabets: &Alphabets) -> Result<()> {
        match self {
            Policy::Constant(a) => alphabets.check_actions(&[*a]),
            Policy::Scripted(s) => alphabets.check_actions(s),
            Policy::Program { fallback, .. } => alphabets.check_actions(&[*fallback]),
        }
    }

    /// The action after the given (equal length) past.
    pub fn act(&self, actions: &[Action], perceptions: &[Natural], alphabets: &Alphabets) -> Action {
        match self {
            Policy::Constant(a) => *a,
            Policy::Scripted(s) => s.get(actions.len()).or(s.last()).copied().unwrap_or(0),
            Policy::Program { program, budget, fallback } => {
                let tape: Vec<Natural> = actions
                    .iter()
                    .zip(perceptions)
                    .flat_map(|(&y, x)| [Natural::from(y), x.clone()])
                    .collect();
                match execute(program, Tape::Naturals(&tape), *budget).outcome {
                    Outcome::Halted(v) => (v % alphabets.action_size()).to_u32().unwrap_or(*fallback),
                    Outcome::OutOfBudget => *fallback,
                }
            }
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Constant(a) => write!(f, "constant:{a}"),
            Policy::Scripted(s) => {
                let s: Vec<String> = s.iter().map(|a| a.to_string()).collect();
                write!(f, "scripted:{}", s.join(","))
            }
            Policy::Program { program, budget, fallback } => {
                write!(f, "program:{}:{budget}:{fallback}", program.index())
            }
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    /// Parses `constant:A`, `scripted:A,B,..` or `program:INDEX:BUDGET:FALLBACK`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad policy {s:?}"));
        let action = |w: &str| w.trim().parse::<Action>().map_err(|_| bad());
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "constant" => Ok(Policy::Constant(action(rest)?)),
            "scripted" => Policy::scripted(rest.split(',').map(action).collect::<Result<Vec<_>>>()?),
            "program" => {
                let parts: Vec<&str> = rest.split(':').collect();
                let [index, budget, fallback] = parts[..] else {
                    return Err(bad());
                };
                let index: crate::minilang::ProgramIndex = index.parse()?;
                let budget = StepBudget::new(budget.trim().parse().map_err(|_| bad())?)?;
                Ok(Policy::Program { program: crate::minilang::decode(&index), budget, fallback: action(fallback)? })
            }
            _ => Err(bad()),
        }
    }
}

/// Output of `q` on every prefix of an action string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaResult {
    pub perceptions: Vec<Natural>,
    /// Length of the first prefix on which `q` ran out of budget.
    pub unknown_at: Option<usize>,
}

impl GammaResult {
    pub fn is_complete(&self) -> bool {
        self.unknown_at.is_none()
    }
}

/// `(q(s_1..1), q(s_1..2), ...)`, stopping at the first prefix that exceeds the budget.
pub fn gamma(q: &Program, actions: &[Action], budget: StepBudget, alphabets: &Alphabets) -> Result<GammaResult> {
    alphabets.check_actions(actions)?;
    let mut perceptions = Vec::with_capacity(actions.len());
    for k in 1..=actions.len() {
        match run(q, &actions[..k], budget, alphabets)? {
            Outcome::Halted(x) => perceptions.push(x),
            Outcome::OutOfBudget => return Ok(GammaResult { perceptions, unknown_at: Some(k) }),
        }
    }
    Ok(GammaResult { perceptions, unknown_at: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RolloutStatus {
    Complete,
    /// The environment ran out of budget in future cycle `k` (1-based).
    Truncated { step: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RolloutResult {
    /// `x_{n+1} .. x_{n+m}` with `m <= L`.
    pub perceptions: Vec<Natural>,
    pub actions: Vec<Action>,
    pub status: RolloutStatus,
}

/// The first `horizon` future perceptions of `q` under `p` after `h`.
///
/// Fails with [`Error::Consistency`] unless `q` reproduces `h` within the budget.
pub fn rollout_psi(
    q: &Program,
    p: &Policy,
    h: &History,
    horizon: usize,
    budget: StepBudget,
    alphabets: &Alphabets,
) -> Result<RolloutResult> {
    h.validate(alphabets)?;
    let g = gamma(q, h.actions(), budget, alphabets)?;
    if !g.is_complete() || g.perceptions != h.perceptions() {
        return Err(Error::Consistency(format!(
            "program {} does not reproduce the history within {budget} steps",
            q.index()
        )));
    }
    Ok(rollout_from(q, p, h, horizon, budget, alphabets))
}

/// [`rollout_psi`] without the consistency check.
pub(crate) fn rollout_from(
    q: &Program,
    p: &Policy,
    h: &History,
    horizon: usize,
    budget: StepBudget,
    alphabets: &Alphabets,
) -> RolloutResult {
    let n = h.len();
    let mut actions = h.actions().to_vec();
    let mut perceptions = h.perceptions().to_vec();
    for k in 1..=horizon {
        let y = p.act(&actions, &perceptions, alphabets);
        actions.push(y);
        match execute(q, Tape::Actions(&actions), budget).outcome {
            Outcome::Halted(x) => perceptions.push(alphabets.perceive(x)),
            Outcome::OutOfBudget => {
                actions.truncate(n + k - 1);
                return RolloutResult {
                    perceptions: perceptions.split_off(n),
                    actions: actions.split_off(n),
                    status: RolloutStatus::Truncated { step: k },
                };
            }
        }
    }
    RolloutResult {
        perceptions: perceptions.split_off(n),
        actions: actions.split_off(n),
        status: RolloutStatus::Complete,
    }
}

/// Past perceptions followed by the rolled-out future: a prefix of `W_p(q)`.
pub fn w_p(
    q: &Program,
    p: &Policy,
    h: &History,
    horizon: usize,
    budget: StepBudget,
    alphabets: &Alphabets,
) -> Result<Vec<Natural>> {
    let r = rollout_psi(q, p, h, horizon, budget, alphabets)?;
    let mut out = h.perceptions().to_vec();
    out.extend(r.perceptions);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse_asm, PerceptionMode};

    fn alpha() -> Alphabets {
        Alphabets::new(2, PerceptionMode::Naturals).unwrap()
    }

    fn budget(n: u64) -> StepBudget {
        StepBudget::new(n).unwrap()
    }

    fn nats(v: &[u64]) -> Vec<Natural> {
        v.iter().map(|&x| Natural::from(x)).collect()
    }

    #[test]
    fn gamma_of_constant_program() {
        let q = parse_asm("push 4\nhalt").unwrap();
        let g = gamma(&q, &[0, 1, 1, 0, 1], budget(10), &alpha()).unwrap();
        assert_eq!(g.perceptions, nats(&[4, 4, 4, 4, 4]));
        assert!(g.is_complete());
    }

    #[test]
    fn gamma_reports_first_unknown_prefix() {
        // Halts with 1 on prefixes shorter than 3, loops otherwise.
        let q = parse_asm("len\npush 2\nsub\njz 5\njmp 4\npush 1\nhalt").unwrap();
        let g = gamma(&q, &[0; 5], budget(200), &alpha()).unwrap();
        assert_eq!(g.perceptions, nats(&[1, 1]));
        assert_eq!(g.unknown_at, Some(3));
    }

    #[test]
    fn rollout_basics() {
        let q = parse_asm("push 3\nhalt").unwrap();
        let p = Policy::Constant(1);
        let h = History::empty();
        let r = rollout_psi(&q, &p, &h, 0, budget(10), &alpha()).unwrap();
        assert!(r.perceptions.is_empty() && r.status == RolloutStatus::Complete);
        assert_eq!(w_p(&q, &p, &h, 4, budget(10), &alpha()).unwrap(), nats(&[3, 3, 3, 3]));
        let bad = History::new(vec![0], nats(&[2])).unwrap();
        assert!(matches!(rollout_psi(&q, &p, &bad, 3, budget(10), &alpha()), Err(Error::Consistency(_))));
    }

    #[test]
    fn echo_environment_follows_the_policy() {
        // x_k = y_k + 1
        let q = parse_asm("len\npush 1\nsub\njz 6\nnext\njmp 0\nread\npush 1\nadd\nhalt").unwrap();
        let p = Policy::scripted(vec![1, 0, 1]).unwrap();
        let h = History::new(vec![0], nats(&[1])).unwrap();
        let w = w_p(&q, &p, &h, 4, budget(500), &alpha()).unwrap();
        // The script is indexed from the start of the whole interaction.
        assert_eq!(w, nats(&[1, 1, 2, 2, 2]));
    }

    #[test]
    fn program_policy_reads_interleaved_history() {
        // Plays the last perception, reduced mod |Y|; fallback 0 on an empty past.
        let prog = parse_asm("len\npush 1\nsub\njz 6\nnext\njmp 0\nread\nhalt").unwrap();
        let p = Policy::Program { program: prog, budget: budget(200), fallback: 0 };
        let a = alpha();
        assert_eq!(p.act(&[], &[], &a), 0);
        assert_eq!(p.act(&[0, 0], &nats(&[4, 3]), &a), 1);
        let looping = Policy::Program { program: parse_asm("jmp 0").unwrap(), budget: budget(5), fallback: 1 };
        assert_eq!(looping.act(&[], &[], &a), 1);
    }

    #[test]
    fn history_text_roundtrip() {
        let h = History::new(vec![0, 1, 1], nats(&[5, 0, 12])).unwrap();
        assert_eq!(h.to_string().parse::<History>().unwrap(), h);
        assert_eq!("".parse::<History>().unwrap(), History::empty());
        assert!("0 1\n5".parse::<History>().is_err());
        assert!("0 x\n5 5".parse::<History>().is_err());
    }

    #[test]
    fn policy_text_roundtrip() {
        for text in ["constant:1", "scripted:0,1,1", "program:12345:40:1"] {
            let p: Policy = text.parse().unwrap();
            assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        }
        assert!("scripted:".parse::<Policy>().is_err());
        assert!("random".parse::<Policy>().is_err());
    }
}
