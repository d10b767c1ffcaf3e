//! Arithmetic operation accounting.
//!
//! Kernels in [`crate::dense`] report the multiplications, divisions and
//! square roots they perform into a thread-local tally. A solve measures its
//! own work with [`measure`], which isolates the tally of the closure from
//! whatever the calling thread had accumulated before.

use std::cell::Cell;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Counts of the expensive floating point operations performed by a solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub multiplications: u64,
    pub divisions: u64,
    pub square_roots: u64,
}

impl OpCounter {
    /// Multiplications + divisions + 10 x square roots.
    pub fn weighted_total(&self) -> u64 {
        self.multiplications + self.divisions + 10 * self.square_roots
    }
}

impl Add for OpCounter {
    type Output = OpCounter;

    fn add(self, rhs: OpCounter) -> OpCounter {
        OpCounter {
            multiplications: self.multiplications + rhs.multiplications,
            divisions: self.divisions + rhs.divisions,
            square_roots: self.square_roots + rhs.square_roots,
        }
    }
}

impl Sub for OpCounter {
    type Output = OpCounter;

    fn sub(self, rhs: OpCounter) -> OpCounter {
        OpCounter {
            multiplications: self.multiplications - rhs.multiplications,
            divisions: self.divisions - rhs.divisions,
            square_roots: self.square_roots - rhs.square_roots,
        }
    }
}

thread_local! {
    static TALLY: Cell<OpCounter> = const { Cell::new(OpCounter {
        multiplications: 0,
        divisions: 0,
        square_roots: 0,
    }) };
}

#[inline]
fn bump(f: impl FnOnce(&mut OpCounter)) {
    TALLY.with(|t| {
        let mut c = t.get();
        f(&mut c);
        t.set(c);
    });
}

#[inline]
pub(crate) fn mul(n: usize) {
    bump(|c| c.multiplications += n as u64);
}

#[inline]
pub(crate) fn div(n: usize) {
    bump(|c| c.divisions += n as u64);
}

#[inline]
pub(crate) fn sqrt(n: usize) {
    bump(|c| c.square_roots += n as u64);
}

/// Current tally of the calling thread.
pub fn snapshot() -> OpCounter {
    TALLY.with(|t| t.get())
}

/// Runs `f` and returns its result together with the operations it performed.
///
/// The thread tally is restored to `before + spent` afterwards, so nested
/// measurements compose.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, OpCounter) {
    let before = snapshot();
    TALLY.with(|t| t.set(OpCounter::default()));
    let out = f();
    let spent = snapshot();
    TALLY.with(|t| t.set(before + spent));
    (out, spent)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_total_counts_square_roots_tenfold() {
        let c = OpCounter {
            multiplications: 3,
            divisions: 2,
            square_roots: 1,
        };
        assert_eq!(c.weighted_total(), 15);
    }

    #[test]
    fn nested_measurements_compose() {
        let (_, outer) = measure(|| {
            mul(5);
            let (_, inner) = measure(|| {
                div(2);
                sqrt(1);
            });
            assert_eq!(inner.divisions, 2);
            assert_eq!(inner.square_roots, 1);
            mul(1);
        });
        assert_eq!(outer.multiplications, 6);
        assert_eq!(outer.divisions, 2);
        assert_eq!(outer.square_roots, 1);
    }

    #[test]
    fn tally_is_thread_confined() {
        let (_, spent) = measure(|| {
            std::thread::spawn(|| mul(100)).join().unwrap();
            mul(1);
        });
        assert_eq!(spent.multiplications, 1);
    }
}
