//! Cantor pairing and budgeted dovetailing.
//!
//! [`dovetail_search`] visits cells `n = 1, 2, 3, ...`, splits each into a step
//! count and a task index with [`unpair`], and simulates that task for that
//! many steps. Cells may be evaluated speculatively in parallel, but the first
//! accepted cell in sequential order is the one reported.

use num_bigint::BigUint;

use crate::par;

/// `(k1 + k2)(k1 + k2 + 1) / 2 + k2`.
pub fn pair(k1: &BigUint, k2: &BigUint) -> BigUint {
    let s = k1 + k2;
    ((&s * (&s + 1u8)) >> 1u8) + k2
}

/// Inverse of [`pair`].
pub fn unpair(n: &BigUint) -> (BigUint, BigUint) {
    let w = ((n << 3u8) + 1u8).sqrt();
    let w = (w - 1u8) >> 1u8;
    let t = (&w * (&w + 1u8)) >> 1u8;
    let k2 = n - t;
    let k1 = w - &k2;
    (k1, k2)
}

/// [`pair`] on machine integers; `None` if the result overflows.
pub fn pair_u64(k1: u64, k2: u64) -> Option<u64> {
    let s = k1 as u128 + k2 as u128;
    let t = s.checked_mul(s + 1)? / 2;
    u64::try_from(t + k2 as u128).ok()
}

/// [`unpair`] on machine integers.
pub fn unpair_u64(n: u64) -> (u64, u64) {
    let n = n as u128;
    let mut w = (((8 * n + 1) as f64).sqrt() as u128).saturating_sub(1) / 2;
    // Float sqrt can be off by one near perfect squares.
    while (w + 1) * (w + 2) / 2 <= n {
        w += 1;
    }
    while w * (w + 1) / 2 > n {
        w -= 1;
    }
    let k2 = n - w * (w + 1) / 2;
    ((w - k2) as u64, k2 as u64)
}

/// An indexed family of step-bounded computations with an acceptance test.
pub trait TaskFamily: Sync {
    type Output: Send;

    /// Runs task `index` for at most `steps` steps; `None` if it has not halted.
    fn simulate(&self, index: u64, steps: u64) -> Option<Self::Output>;

    fn accept(&self, index: u64, output: &Self::Output) -> bool;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Dovetail<T> {
    Found { cell: u64, index: u64, steps: u64, output: T },
    Exhausted { cells: u64 },
}

impl<T> Dovetail<T> {
    pub fn found(self) -> Option<(u64, T)> {
        match self {
            Dovetail::Found { index, output, .. } => Some((index, output)),
            Dovetail::Exhausted { .. } => None,
        }
    }
}

const FIRST_CHUNK: u64 = 64;
const MAX_CHUNK: u64 = 1 << 14;

/// Visits at most `global_cap` cells and returns the first accepted halting
/// result in cell order.
pub fn dovetail_search<F: TaskFamily>(family: &F, global_cap: u64) -> Dovetail<F::Output> {
    let mut start = 1u64;
    let mut chunk = FIRST_CHUNK;
    while start <= global_cap {
        let end = global_cap.min(start.saturating_add(chunk - 1));
        let cells: Vec<u64> = (start..=end).collect();
        let hits = par::map_slice(&cells, |&n| {
            let (steps, index) = unpair_u64(n);
            if steps == 0 {
                return None;
            }
            family
                .simulate(index, steps)
                .filter(|out| family.accept(index, out))
                .map(|out| (n, index, steps, out))
        });
        if let Some((cell, index, steps, output)) = hits.into_iter().flatten().next() {
            return Dovetail::Found { cell, index, steps, output };
        }
        if end == u64::MAX {
            break;
        }
        start = end + 1;
        chunk = (chunk * 2).min(MAX_CHUNK);
    }
    Dovetail::Exhausted { cells: global_cap }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        let b = |x: u64| BigUint::from(x);
        assert_eq!(pair(&b(0), &b(0)), b(0));
        assert_eq!(pair(&b(1), &b(2)), b(8));
        assert_eq!(unpair(&b(8)), (b(1), b(2)));
        assert_eq!(unpair_u64(8), (1, 2));
        assert_eq!(pair_u64(u64::MAX, 1), None);
    }

    #[test]
    fn machine_and_big_versions_agree() {
        for n in 0u64..20_000 {
            let (a, b) = unpair_u64(n);
            assert_eq!(unpair(&BigUint::from(n)), (BigUint::from(a), BigUint::from(b)));
            assert_eq!(pair_u64(a, b), Some(n));
        }
    }

    struct Countdown(Vec<Option<u64>>);

    impl TaskFamily for Countdown {
        type Output = u64;
        fn simulate(&self, index: u64, steps: u64) -> Option<u64> {
            match self.0.get(index as usize).copied().flatten() {
                Some(need) if need <= steps => Some(index * 10),
                _ => None,
            }
        }
        fn accept(&self, _: u64, _: &u64) -> bool {
            true
        }
    }

    #[test]
    fn skips_a_diverging_first_task() {
        let fam = Countdown(vec![None, Some(3)]);
        let r = dovetail_search(&fam, 10_000);
        assert_eq!(r.clone().found(), Some((1, 10)));
        // (t, i) = (3, 1) is cell pair(3, 1) = 11, the first cell giving task 1 three steps.
        assert!(matches!(r, Dovetail::Found { cell: 11, steps: 3, .. }));
    }

    #[test]
    fn immediate_hit_and_exhaustion() {
        assert!(matches!(
            dovetail_search(&Countdown(vec![Some(1)]), 5),
            Dovetail::Found { cell: 1, index: 0, .. }
        ));
        assert_eq!(dovetail_search(&Countdown(vec![]), 10_000), Dovetail::Exhausted { cells: 10_000 });
    }
}
