use num_bigint::BigUint;

use super::instr::{Instr, Opcode};
use super::Program;
use crate::error::{Error, Result};

/// Parses assembly text: one instruction per line, `#` starts a comment,
/// blank lines are ignored. Jump operands are absolute instruction numbers.
pub fn parse_asm(text: &str) -> Result<Program> {
    let mut instrs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Asm { line: lineno + 1, msg };
        let mut words = line.split_whitespace();
        let mnemonic = words.next().unwrap_or_default().to_ascii_lowercase();
        let op = Opcode::from_mnemonic(&mnemonic)
            .ok_or_else(|| err(format!("unknown mnemonic {mnemonic:?}")))?;
        let operand = words.next();
        if words.next().is_some() {
            return Err(err("trailing tokens".into()));
        }
        let ins = match op {
            Opcode::Push => {
                let n = operand.ok_or_else(|| err("push needs a literal".into()))?;
                Instr::Push(
                    n.parse::<BigUint>()
                        .map_err(|_| err(format!("bad literal {n:?}")))?,
                )
            }
            Opcode::Jz | Opcode::Jmp => {
                let t = operand.ok_or_else(|| err("jump needs a target".into()))?;
                let t: usize = t.parse().map_err(|_| err(format!("bad target {t:?}")))?;
                if op == Opcode::Jz {
                    Instr::Jz(t)
                } else {
                    Instr::Jmp(t)
                }
            }
            other => {
                if operand.is_some() {
                    return Err(err(format!("{} takes no operand", other.mnemonic())));
                }
                Instr::with_default_operand(other)
            }
        };
        instrs.push(ins);
    }
    Program::from_instrs(instrs)
}
