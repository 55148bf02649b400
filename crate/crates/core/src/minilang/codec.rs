//! Total index codec.
//!
//! An index `i` is read as the bijective base-2 string of `i + 1` (its binary
//! digits after the leading one), so every natural is a finite bit string and
//! every bit string has exactly one index. The string is parsed as a
//! concatenation of instructions: a prefix-coded opcode followed by an
//! Elias-gamma operand where the opcode takes one. A stream that ends in the
//! middle of an instruction is completed with virtual `1` bits. Jump targets
//! are reduced modulo the program length once the whole stream is parsed.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::instr::{code_table, Instr, Opcode};
use super::{Program, ProgramIndex};
use crate::Natural;

struct BitReader<'a> {
    value: &'a BigUint,
    remaining: u64,
}

impl<'a> BitReader<'a> {
    fn new(value: &'a BigUint) -> Self {
        // value = i + 1 >= 1, so bits() >= 1.
        BitReader { value, remaining: value.bits() - 1 }
    }

    fn exhausted(&self) -> bool {
        self.remaining == 0
    }

    fn next_bit(&mut self) -> bool {
        if self.remaining == 0 {
            return true;
        }
        self.remaining -= 1;
        self.value.bit(self.remaining)
    }

    fn read_opcode(&mut self) -> Opcode {
        let mut len = 0u8;
        let mut bits = 0u32;
        loop {
            bits = (bits << 1) | self.next_bit() as u32;
            len += 1;
            if let Some(op) = code_table().lookup(len, bits) {
                return op;
            }
        }
    }

    fn read_gamma(&mut self) -> BigUint {
        let mut zeros = 0u64;
        while !self.next_bit() {
            zeros += 1;
        }
        let mut m = BigUint::one();
        for _ in 0..zeros {
            m <<= 1u8;
            if self.next_bit() {
                m |= BigUint::one();
            }
        }
        m - 1u8
    }
}

#[derive(Default)]
struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    fn push_code(&mut self, len: u8, bits: u32) {
        for k in (0..len).rev() {
            self.bits.push((bits >> k) & 1 == 1);
        }
    }

    fn push_gamma(&mut self, n: &BigUint) {
        let m = n + 1u8;
        let width = m.bits();
        for _ in 1..width {
            self.bits.push(false);
        }
        for k in (0..width).rev() {
            self.bits.push(m.bit(k));
        }
    }

    fn into_index(self) -> BigUint {
        let mut m = BigUint::zero();
        m.set_bit(self.bits.len() as u64, true);
        for (k, &b) in self.bits.iter().enumerate() {
            if b {
                m.set_bit((self.bits.len() - 1 - k) as u64, true);
            }
        }
        m - 1u8
    }
}

pub fn decode(index: &ProgramIndex) -> Program {
    let shifted = index.value() + 1u8;
    let mut reader = BitReader::new(&shifted);
    let mut instrs = Vec::new();
    let mut raw_targets = Vec::new();
    while !reader.exhausted() {
        let op = reader.read_opcode();
        let instr = match op {
            Opcode::Push => Instr::Push(reader.read_gamma()),
            Opcode::Jz | Opcode::Jmp => {
                raw_targets.push((instrs.len(), reader.read_gamma()));
                Instr::with_default_operand(op)
            }
            _ => Instr::with_default_operand(op),
        };
        instrs.push(instr);
    }
    let len = BigUint::from(instrs.len());
    for (at, raw) in raw_targets {
        let t = usize::try_from(raw % &len).expect("target below program length");
        match &mut instrs[at] {
            Instr::Jz(x) | Instr::Jmp(x) => *x = t,
            _ => unreachable!(),
        }
    }
    Program::from_instrs_unchecked(instrs)
}

pub fn encode(program: &Program) -> ProgramIndex {
    let mut w = BitWriter::default();
    for ins in program.instrs() {
        let (len, bits) = ins.opcode().code();
        w.push_code(len, bits);
        match ins {
            Instr::Push(n) => w.push_gamma(n),
            Instr::Jz(t) | Instr::Jmp(t) => w.push_gamma(&Natural::from(*t)),
            _ => {}
        }
    }
    ProgramIndex::new(w.into_index())
}

/// Number of code bits in the canonical encoding of `program`.
///
/// `encode(p)` lies in `[2^bits - 1, 2^(bits+1) - 2]`.
pub fn code_bits(program: &Program) -> u64 {
    program
        .instrs()
        .iter()
        .map(|ins| {
            let op_bits = ins.opcode().code().0 as u64;
            let operand = match ins {
                Instr::Push(n) => gamma_bits(n),
                Instr::Jz(t) | Instr::Jmp(t) => gamma_bits(&Natural::from(*t)),
                _ => 0,
            };
            op_bits + operand
        })
        .sum()
}

fn gamma_bits(n: &BigUint) -> u64 {
    2 * (n + 1u8).bits() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: u64) -> ProgramIndex {
        ProgramIndex::from(n)
    }

    /// Index whose bit string is `bits`.
    fn from_bits(bits: &str) -> ProgramIndex {
        let v = u64::from_str_radix(&format!("1{bits}"), 2).unwrap();
        idx(v - 1)
    }

    #[test]
    fn zero_is_empty_program() {
        assert!(decode(&idx(0)).is_empty());
        assert_eq!(encode(&Program::default()), idx(0));
    }

    #[test]
    fn small_indices_decode_to_single_opcodes() {
        assert_eq!(decode(&idx(1)).instrs(), &[Instr::Exp2]);
        assert_eq!(decode(&from_bits("100")).instrs(), &[Instr::Halt]);
        assert_eq!(decode(&from_bits("0100")).instrs(), &[Instr::Exp2, Instr::Halt]);
    }

    #[test]
    fn gamma_roundtrip() {
        for n in 0u64..300 {
            let mut w = BitWriter::default();
            w.push_gamma(&Natural::from(n));
            assert_eq!(w.bits.len() as u64, gamma_bits(&Natural::from(n)));
            let index = w.into_index() + 1u8;
            let mut r = BitReader::new(&index);
            assert_eq!(r.read_gamma(), Natural::from(n));
            assert!(r.exhausted());
        }
    }

    #[test]
    fn truncated_operand_is_completed() {
        // Push, then "0" and the stream ends inside the gamma prefix. Virtual
        // ones complete it to gamma "011" = 3, i.e. operand 2.
        let truncated = from_bits("110100");
        let p = decode(&truncated);
        assert_eq!(p.instrs(), &[Instr::Push(Natural::from(2u8))]);
        let canonical = encode(&p);
        assert_ne!(canonical, truncated);
        assert_eq!(decode(&canonical), p);
    }

    #[test]
    fn roundtrip_over_a_dense_range() {
        for i in 0u64..100_000 {
            let p = decode(&idx(i));
            let j = encode(&p);
            assert_eq!(decode(&j), p, "index {i}");
            assert!(code_bits(&p) + 1 == (j.value() + 1u8).bits());
        }
    }

    #[test]
    fn out_of_range_targets_wrap() {
        let p = Program::from_instrs(vec![Instr::Jmp(0), Instr::Halt]).unwrap();
        let mut w = BitWriter::default();
        let (l, b) = Opcode::Jmp.code();
        w.push_code(l, b);
        w.push_gamma(&Natural::from(5u8));
        let (l, b) = Opcode::Halt.code();
        w.push_code(l, b);
        let q = decode(&ProgramIndex::new(w.into_index()));
        // 5 mod 2 == 1
        assert_eq!(q.instrs(), &[Instr::Jmp(1), Instr::Halt]);
        assert_ne!(q, p);
    }
}
