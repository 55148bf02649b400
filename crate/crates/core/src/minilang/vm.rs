//! Interpreter.
//!
//! Every executed instruction costs one step; reaching the end of the code
//! jumps back to instruction 0 and also costs one step, so a program without a
//! reachable `halt` never halts. A run may hold at most
//! [`StepBudget::space_bits`] bits of stack values at once; exceeding that
//! allowance ends the run as [`Outcome::OutOfBudget`] with the whole budget
//! charged. Because the allowance only grows with the budget, a run that halts
//! under some budget halts with the same value under every larger one.

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};

use super::instr::Instr;
use super::{Action, Alphabets, Program, StepBudget};
use crate::error::Result;
use crate::Natural;

/// Stack storage granted per unit of step budget.
pub const SPACE_BITS_PER_STEP: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Halted(Natural),
    OutOfBudget,
}

impl Outcome {
    pub fn halted(&self) -> Option<&Natural> {
        match self {
            Outcome::Halted(v) => Some(v),
            Outcome::OutOfBudget => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub outcome: Outcome,
    pub steps: u64,
}

/// Input string visible to a running program.
#[derive(Clone, Copy, Debug)]
pub enum Tape<'a> {
    Actions(&'a [Action]),
    Naturals(&'a [Natural]),
}

impl Tape<'_> {
    fn len(&self) -> usize {
        match self {
            Tape::Actions(a) => a.len(),
            Tape::Naturals(n) => n.len(),
        }
    }

    fn read(&self, at: usize) -> Natural {
        match self {
            Tape::Actions(a) => a.get(at).map_or_else(Natural::zero, |&s| Natural::from(s)),
            Tape::Naturals(n) => n.get(at).cloned().unwrap_or_default(),
        }
    }
}

struct Stack {
    values: Vec<Natural>,
    bits: u64,
    allowance: u64,
}

struct Overflow;

impl Stack {
    fn pop(&mut self) -> Natural {
        match self.values.pop() {
            Some(v) => {
                self.bits -= v.bits();
                v
            }
            None => Natural::zero(),
        }
    }

    fn push(&mut self, v: Natural) -> std::result::Result<(), Overflow> {
        self.bits += v.bits();
        self.values.push(v);
        if self.bits > self.allowance {
            Err(Overflow)
        } else {
            Ok(())
        }
    }

    fn headroom(&self) -> u64 {
        self.allowance.saturating_sub(self.bits)
    }

    fn top(&self) -> Natural {
        self.values.last().cloned().unwrap_or_default()
    }
}

/// Runs `program` on `tape` and returns the raw (unreduced) outcome.
pub fn execute(program: &Program, tape: Tape<'_>, budget: StepBudget) -> Execution {
    let max = budget.max_steps();
    let out_of_budget = Execution { outcome: Outcome::OutOfBudget, steps: max };
    let code = program.instrs();
    if code.is_empty() {
        return out_of_budget;
    }
    let mut stack = Stack { values: Vec::new(), bits: 0, allowance: budget.space_bits() };
    let mut pc = 0usize;
    let mut cursor = 0usize;
    let mut steps = 0u64;

    macro_rules! push {
        ($v:expr) => {
            if stack.push($v).is_err() {
                return out_of_budget;
            }
        };
    }

    while steps < max {
        steps += 1;
        let Some(ins) = code.get(pc) else {
            pc = 0;
            continue;
        };
        pc += 1;
        match ins {
            Instr::Halt => {
                return Execution { outcome: Outcome::Halted(stack.top()), steps };
            }
            Instr::Push(n) => push!(n.clone()),
            Instr::Exp2 => {
                let x = stack.pop();
                match u64::try_from(&x) {
                    Ok(e) if e < stack.headroom() => {
                        let mut r = BigUint::zero();
                        r.set_bit(e, true);
                        push!(r);
                    }
                    _ => return out_of_budget,
                }
            }
            Instr::Dup => push!(stack.top()),
            Instr::Mul => {
                let b = stack.pop();
                let a = stack.pop();
                if a.bits() + b.bits() > stack.headroom() {
                    return out_of_budget;
                }
                push!(a * b);
            }
            Instr::Add => {
                let b = stack.pop();
                let a = stack.pop();
                push!(a + b);
            }
            Instr::Pow => {
                let b = stack.pop();
                let a = stack.pop();
                let r = if b.is_zero() {
                    BigUint::one()
                } else if a <= BigUint::one() {
                    a
                } else {
                    // Charged at the bound b * bitlen(a) before computing.
                    match u64::try_from(&b) {
                        Ok(e) if e.checked_mul(a.bits()).is_some_and(|c| c <= stack.headroom()) => {
                            a.pow(e)
                        }
                        _ => return out_of_budget,
                    }
                };
                push!(r);
            }
            Instr::Jz(t) => {
                if stack.pop().is_zero() {
                    pc = *t;
                }
            }
            Instr::Swap => {
                let b = stack.pop();
                let a = stack.pop();
                push!(b);
                push!(a);
            }
            Instr::Sub => {
                let b = stack.pop();
                let a = stack.pop();
                push!(if a > b { a - b } else { BigUint::zero() });
            }
            Instr::Jmp(t) => pc = *t,
            Instr::Read => push!(tape.read(cursor)),
            Instr::Len => push!(Natural::from(tape.len().saturating_sub(cursor))),
            Instr::Over => {
                let b = stack.pop();
                let a = stack.pop();
                push!(a.clone());
                push!(b);
                push!(a);
            }
            Instr::Drop => {
                stack.pop();
            }
            Instr::Div => {
                let b = stack.pop();
                let a = stack.pop();
                push!(if b.is_zero() { BigUint::zero() } else { a / b });
            }
            Instr::Mod => {
                let b = stack.pop();
                let a = stack.pop();
                push!(if b.is_zero() { a } else { a % b });
            }
            Instr::Next => cursor = cursor.saturating_add(1),
        }
    }
    out_of_budget
}

/// Runs `program` as an environment on an action string.
///
/// Rejects actions outside the alphabet before executing anything. A halted
/// value is reduced into the perception alphabet.
pub fn run(
    program: &Program,
    actions: &[Action],
    budget: StepBudget,
    alphabets: &Alphabets,
) -> Result<Outcome> {
    alphabets.check_actions(actions)?;
    Ok(match execute(program, Tape::Actions(actions), budget).outcome {
        Outcome::Halted(v) => Outcome::Halted(alphabets.perceive(v)),
        Outcome::OutOfBudget => Outcome::OutOfBudget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse_asm, PerceptionMode};

    fn budget(n: u64) -> StepBudget {
        StepBudget::new(n).unwrap()
    }

    fn nat(n: u64) -> Natural {
        Natural::from(n)
    }

    fn exec(src: &str, input: &[Action], steps: u64) -> Execution {
        execute(&parse_asm(src).unwrap(), Tape::Actions(input), budget(steps))
    }

    #[test]
    fn constant_program_halts() {
        let e = exec("push 7\nhalt", &[1, 0, 1], 10);
        assert_eq!(e.outcome, Outcome::Halted(nat(7)));
        assert_eq!(e.steps, 2);
    }

    #[test]
    fn backward_jump_runs_out_of_budget() {
        let e = exec("push 1\njmp 0", &[], 1000);
        assert_eq!(e.outcome, Outcome::OutOfBudget);
        assert_eq!(e.steps, 1000);
    }

    #[test]
    fn falling_off_the_end_wraps_around() {
        // Without halt the program never stops.
        assert_eq!(exec("push 1", &[], 50).outcome, Outcome::OutOfBudget);
        assert_eq!(exec("", &[], 50).outcome, Outcome::OutOfBudget);
        // The wrap itself costs a step: push(1) end(2) push(3) ... halts never.
        let e = exec("len\njz 3\nhalt\npush 4\nhalt", &[], 10);
        assert_eq!(e.outcome, Outcome::Halted(nat(4)));
    }

    #[test]
    fn arithmetic_semantics() {
        assert_eq!(exec("push 3\npush 5\nsub\nhalt", &[], 10).outcome, Outcome::Halted(nat(0)));
        assert_eq!(exec("push 5\npush 3\nsub\nhalt", &[], 10).outcome, Outcome::Halted(nat(2)));
        assert_eq!(exec("push 7\npush 0\ndiv\nhalt", &[], 10).outcome, Outcome::Halted(nat(0)));
        assert_eq!(exec("push 7\npush 0\nmod\nhalt", &[], 10).outcome, Outcome::Halted(nat(7)));
        assert_eq!(exec("push 3\npush 4\npow\nhalt", &[], 10).outcome, Outcome::Halted(nat(81)));
        assert_eq!(exec("push 10\nexp2\nhalt", &[], 10).outcome, Outcome::Halted(nat(1024)));
        assert_eq!(exec("push 2\npush 3\nover\nhalt", &[], 10).outcome, Outcome::Halted(nat(2)));
        assert_eq!(exec("add\nhalt", &[], 10).outcome, Outcome::Halted(nat(0)));
        assert_eq!(exec("halt", &[], 10).outcome, Outcome::Halted(nat(0)));
    }

    #[test]
    fn input_access() {
        let src = "read\nnext\nread\nadd\nlen\nadd\nhalt";
        // 2 + 1 + remaining(3 - 1)
        assert_eq!(exec(src, &[2, 1, 0], 20).outcome, Outcome::Halted(nat(5)));
        assert_eq!(exec("next\nnext\nread\nhalt", &[1], 20).outcome, Outcome::Halted(nat(0)));
    }

    #[test]
    fn space_allowance_follows_budget() {
        // 2^(2^14) needs 16385 bits; budget 3 grants 3 * 4096.
        let src = "push 14\nexp2\nexp2\nhalt";
        assert_eq!(exec(src, &[], 3).outcome, Outcome::OutOfBudget);
        let big = exec(src, &[], 5);
        let mut expect = BigUint::zero();
        expect.set_bit(16384, true);
        assert_eq!(big.outcome, Outcome::Halted(expect));
    }

    #[test]
    fn finite_mode_reduces_output_and_checks_input() {
        let a = Alphabets::new(2, PerceptionMode::Finite(3)).unwrap();
        let p = parse_asm("push 10\nhalt").unwrap();
        assert_eq!(run(&p, &[0, 1], budget(5), &a).unwrap(), Outcome::Halted(nat(1)));
        assert!(run(&p, &[0, 2], budget(5), &a).is_err());
    }
}
