//! A small deterministic stack machine whose programs are indexed by every
//! natural number.
//!
//! Programs read an input string of symbols (the action history) and halt with
//! a single natural as output. [`decode`] is total on the naturals and
//! surjective onto well-formed programs; [`encode`] returns the canonical
//! index of a program.

mod asm;
mod codec;
mod instr;
mod vm;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Natural;

pub use asm::parse_asm;
pub use codec::{code_bits, decode, encode};
pub use instr::{Instr, Opcode};
pub use vm::{execute, run, Execution, Outcome, Tape, SPACE_BITS_PER_STEP};

/// An action symbol, always below [`Alphabets::action_size`].
pub type Action = u32;

/// Index of a program under the total codec.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProgramIndex(BigUint);

impl ProgramIndex {
    pub fn new(value: BigUint) -> Self {
        ProgramIndex(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    /// The index as a machine integer, when it fits.
    pub fn to_u64(&self) -> Option<u64> {
        u64::try_from(&self.0).ok()
    }
}

impl From<u64> for ProgramIndex {
    fn from(v: u64) -> Self {
        ProgramIndex(BigUint::from(v))
    }
}

impl fmt::Display for ProgramIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for ProgramIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<BigUint>()
            .map(ProgramIndex)
            .map_err(|_| Error::Parse(format!("not a program index: {s:?}")))
    }
}

impl Serialize for ProgramIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for ProgramIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A well-formed program: every jump target lies inside the code.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Program {
    instrs: Vec<Instr>,
}

impl Program {
    pub fn from_instrs(instrs: Vec<Instr>) -> Result<Self> {
        let len = instrs.len();
        for ins in &instrs {
            if let Some(t) = ins.jump_target() {
                if t >= len {
                    return Err(Error::JumpTarget { target: t, len });
                }
            }
        }
        Ok(Program { instrs })
    }

    pub(crate) fn from_instrs_unchecked(instrs: Vec<Instr>) -> Self {
        debug_assert!(instrs
            .iter()
            .all(|i| i.jump_target().is_none_or(|t| t < instrs.len())));
        Program { instrs }
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// True when no instruction looks at the input.
    pub fn is_input_oblivious(&self) -> bool {
        self.instrs.iter().all(|i| !i.opcode().reads_input())
    }

    /// True when the code has no jumps, so every run halts or falls off the end
    /// within `len + 1` steps.
    pub fn is_loop_free(&self) -> bool {
        self.instrs.iter().all(|i| i.jump_target().is_none())
    }

    /// True when every jump goes forward and the last instruction is `halt`,
    /// so every run halts within `len` steps (ignoring the space allowance).
    pub fn is_certified_total(&self) -> bool {
        let forward = self
            .instrs
            .iter()
            .enumerate()
            .all(|(pc, i)| i.jump_target().is_none_or(|t| t > pc));
        forward && self.instrs.last() == Some(&Instr::Halt)
    }

    /// True when no `halt` occurs, so no run ever halts.
    pub fn never_halts(&self) -> bool {
        !self.instrs.contains(&Instr::Halt)
    }

    pub fn index(&self) -> ProgramIndex {
        encode(self)
    }

    /// Canonical assembly text, one instruction per line.
    pub fn source_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ins in &self.instrs {
            writeln!(f, "{ins}")?;
        }
        Ok(())
    }
}

impl FromStr for Program {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_asm(s)
    }
}

/// Maximum number of instruction executions for one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepBudget(u64);

impl StepBudget {
    pub fn new(max_steps: u64) -> Result<Self> {
        if max_steps == 0 {
            return Err(Error::ZeroBudget);
        }
        Ok(StepBudget(max_steps))
    }

    pub fn max_steps(self) -> u64 {
        self.0
    }

    /// Bits of stack storage a run under this budget may hold at once.
    pub fn space_bits(self) -> u64 {
        self.0.saturating_mul(SPACE_BITS_PER_STEP)
    }
}

impl fmt::Display for StepBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The perception alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PerceptionMode {
    /// `X = {0, .., size - 1}`; machine output is reduced modulo `size`.
    Finite(u32),
    /// `X` is all of the naturals.
    Naturals,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabets {
    action_size: u32,
    perception: PerceptionMode,
}

impl Alphabets {
    pub fn new(action_size: u32, perception: PerceptionMode) -> Result<Self> {
        if action_size < 2 {
            return Err(Error::Alphabet(format!(
                "action alphabet needs at least 2 symbols, got {action_size}"
            )));
        }
        if let PerceptionMode::Finite(n) = perception {
            if n < 2 {
                return Err(Error::Alphabet(format!(
                    "finite perception alphabet needs at least 2 symbols, got {n}"
                )));
            }
        }
        Ok(Alphabets { action_size, perception })
    }

    pub fn action_size(&self) -> u32 {
        self.action_size
    }

    pub fn perception(&self) -> PerceptionMode {
        self.perception
    }

    pub fn check_actions(&self, actions: &[Action]) -> Result<()> {
        match actions.iter().position(|&a| a >= self.action_size) {
            Some(position) => Err(Error::InvalidAction {
                symbol: actions[position],
                position,
                size: self.action_size,
            }),
            None => Ok(()),
        }
    }

    pub fn is_perception(&self, x: &Natural) -> bool {
        match self.perception {
            PerceptionMode::Finite(n) => *x < Natural::from(n),
            PerceptionMode::Naturals => true,
        }
    }

    /// Maps raw machine output into the perception alphabet.
    pub fn perceive(&self, raw: Natural) -> Natural {
        match self.perception {
            PerceptionMode::Finite(n) => raw % n,
            PerceptionMode::Naturals => raw,
        }
    }
}
