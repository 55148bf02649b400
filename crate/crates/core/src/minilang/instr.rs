use std::fmt;
use std::sync::OnceLock;

use crate::Natural;

/// Opcodes of the stack machine.
///
/// Every instruction pops its operands from the stack (a missing operand reads
/// as zero) and pushes its result. Arithmetic is on unbounded naturals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Halt,
    Push,
    Exp2,
    Dup,
    Mul,
    Add,
    Pow,
    Jz,
    Swap,
    Sub,
    Jmp,
    Read,
    Len,
    Over,
    Drop,
    Div,
    Mod,
    Next,
}

impl Opcode {
    pub const ALL: [Opcode; 18] = [
        Opcode::Halt,
        Opcode::Push,
        Opcode::Exp2,
        Opcode::Dup,
        Opcode::Mul,
        Opcode::Add,
        Opcode::Pow,
        Opcode::Jz,
        Opcode::Swap,
        Opcode::Sub,
        Opcode::Jmp,
        Opcode::Read,
        Opcode::Len,
        Opcode::Over,
        Opcode::Drop,
        Opcode::Div,
        Opcode::Mod,
        Opcode::Next,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Halt => "halt",
            Opcode::Push => "push",
            Opcode::Exp2 => "exp2",
            Opcode::Dup => "dup",
            Opcode::Mul => "mul",
            Opcode::Add => "add",
            Opcode::Pow => "pow",
            Opcode::Jz => "jz",
            Opcode::Swap => "swap",
            Opcode::Sub => "sub",
            Opcode::Jmp => "jmp",
            Opcode::Read => "read",
            Opcode::Len => "len",
            Opcode::Over => "over",
            Opcode::Drop => "drop",
            Opcode::Div => "div",
            Opcode::Mod => "mod",
            Opcode::Next => "next",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Opcode::ALL.iter().copied().find(|op| op.mnemonic() == s)
    }

    /// Prefix-free bit code of the opcode as `(length, bits)`, most
    /// significant bit first.
    pub(crate) fn code(self) -> (u8, u32) {
        code_table().codes[self as usize]
    }

    pub fn reads_input(self) -> bool {
        matches!(self, Opcode::Read | Opcode::Len | Opcode::Next)
    }
}

/// Code length of each opcode. The lengths satisfy Kraft's equality, so the
/// canonical code built from them is complete and every bit stream parses.
const CODE_LENGTHS: [(Opcode, u8); 18] = [
    (Opcode::Exp2, 1),
    (Opcode::Halt, 3),
    (Opcode::Dup, 4),
    (Opcode::Add, 4),
    (Opcode::Mul, 4),
    (Opcode::Push, 5),
    (Opcode::Pow, 5),
    (Opcode::Jz, 5),
    (Opcode::Swap, 5),
    (Opcode::Sub, 6),
    (Opcode::Jmp, 6),
    (Opcode::Over, 7),
    (Opcode::Read, 7),
    (Opcode::Len, 8),
    (Opcode::Drop, 8),
    (Opcode::Next, 8),
    (Opcode::Div, 9),
    (Opcode::Mod, 9),
];

pub(crate) struct CodeTable {
    codes: [(u8, u32); 18],
    /// For each length: (first canonical code, position of its opcode in `order`).
    first: Vec<(u32, usize, usize)>,
    order: Vec<Opcode>,
}

impl CodeTable {
    /// Opcode for a complete code word, or `None` if `bits` is a proper prefix.
    pub(crate) fn lookup(&self, len: u8, bits: u32) -> Option<Opcode> {
        let (first, start, count) = *self.first.get(len as usize)?;
        let offset = bits.checked_sub(first)? as usize;
        (offset < count).then(|| self.order[start + offset])
    }
}

pub(crate) fn code_table() -> &'static CodeTable {
    static TABLE: OnceLock<CodeTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut order: Vec<(u8, Opcode)> = CODE_LENGTHS.iter().map(|&(op, l)| (l, op)).collect();
        order.sort_by_key(|&(l, _)| l);
        let max_len = order.last().map_or(0, |&(l, _)| l) as usize;
        let mut codes = [(0u8, 0u32); 18];
        let mut first = vec![(0u32, 0usize, 0usize); max_len + 1];
        let mut code = 0u32;
        let mut prev_len = 0u8;
        for (pos, &(len, op)) in order.iter().enumerate() {
            code <<= len - prev_len;
            prev_len = len;
            let slot = &mut first[len as usize];
            if slot.2 == 0 {
                *slot = (code, pos, 0);
            }
            slot.2 += 1;
            codes[op as usize] = (len, code);
            code += 1;
        }
        CodeTable { codes, first, order: order.into_iter().map(|(_, op)| op).collect() }
    })
}

/// One instruction with its immediate operand, if any.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    /// Halt, emitting the top of the stack (zero when empty).
    Halt,
    Push(Natural),
    /// `x -> 2^x`
    Exp2,
    Dup,
    Mul,
    Add,
    /// `a b -> a^b`
    Pow,
    /// Pop; jump to the absolute target when the popped value is zero.
    Jz(usize),
    Swap,
    /// Truncated subtraction `a b -> max(a - b, 0)`.
    Sub,
    Jmp(usize),
    /// Push the input symbol under the cursor (zero past the end).
    Read,
    /// Push the number of unread input symbols.
    Len,
    Over,
    Drop,
    /// `a b -> a / b`, with `a / 0 = 0`.
    Div,
    /// `a b -> a % b`, with `a % 0 = a`.
    Mod,
    /// Advance the input cursor.
    Next,
}

impl Instr {
    pub fn opcode(&self) -> Opcode {
        match self {
            Instr::Halt => Opcode::Halt,
            Instr::Push(_) => Opcode::Push,
            Instr::Exp2 => Opcode::Exp2,
            Instr::Dup => Opcode::Dup,
            Instr::Mul => Opcode::Mul,
            Instr::Add => Opcode::Add,
            Instr::Pow => Opcode::Pow,
            Instr::Jz(_) => Opcode::Jz,
            Instr::Swap => Opcode::Swap,
            Instr::Sub => Opcode::Sub,
            Instr::Jmp(_) => Opcode::Jmp,
            Instr::Read => Opcode::Read,
            Instr::Len => Opcode::Len,
            Instr::Over => Opcode::Over,
            Instr::Drop => Opcode::Drop,
            Instr::Div => Opcode::Div,
            Instr::Mod => Opcode::Mod,
            Instr::Next => Opcode::Next,
        }
    }

    pub fn jump_target(&self) -> Option<usize> {
        match self {
            Instr::Jz(t) | Instr::Jmp(t) => Some(*t),
            _ => None,
        }
    }

    /// Builds the operand-free instruction for `op`, or one with a zero operand.
    pub(crate) fn with_default_operand(op: Opcode) -> Instr {
        match op {
            Opcode::Halt => Instr::Halt,
            Opcode::Push => Instr::Push(Natural::default()),
            Opcode::Exp2 => Instr::Exp2,
            Opcode::Dup => Instr::Dup,
            Opcode::Mul => Instr::Mul,
            Opcode::Add => Instr::Add,
            Opcode::Pow => Instr::Pow,
            Opcode::Jz => Instr::Jz(0),
            Opcode::Swap => Instr::Swap,
            Opcode::Sub => Instr::Sub,
            Opcode::Jmp => Instr::Jmp(0),
            Opcode::Read => Instr::Read,
            Opcode::Len => Instr::Len,
            Opcode::Over => Instr::Over,
            Opcode::Drop => Instr::Drop,
            Opcode::Div => Instr::Div,
            Opcode::Mod => Instr::Mod,
            Opcode::Next => Instr::Next,
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Push(n) => write!(f, "push {n}"),
            Instr::Jz(t) => write!(f, "jz {t}"),
            Instr::Jmp(t) => write!(f, "jmp {t}"),
            other => f.write_str(other.opcode().mnemonic()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opcode_code_is_complete_and_prefix_free() {
        // Kraft sum of exactly one, accumulated in units of 2^-16.
        let kraft: u32 = Opcode::ALL.iter().map(|op| (1u32 << 16) >> op.code().0).sum();
        assert_eq!(kraft, 1 << 16);
        for a in Opcode::ALL {
            for b in Opcode::ALL {
                if a == b {
                    continue;
                }
                let (la, ca) = a.code();
                let (lb, cb) = b.code();
                if la <= lb {
                    assert_ne!(cb >> (lb - la), ca, "{a:?} is a prefix of {b:?}");
                }
            }
        }
    }

    #[test]
    fn mnemonics_roundtrip() {
        for op in Opcode::ALL {
            assert_eq!(Opcode::from_mnemonic(op.mnemonic()), Some(op));
        }
    }
}
