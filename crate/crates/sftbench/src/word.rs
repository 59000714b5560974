//! Words over a finite, ordered, inverse-closed generating set.
//!
//! Generators are stored as indices (`Letter = u8`) into the presentation's
//! generator list; the file order of that list is the single source of truth
//! for the shortlex order, so comparing index slices lexicographically is
//! exactly the lexicographic tie-break.

use std::cmp::Ordering;

pub type Letter = u8;
pub type Word = Vec<Letter>;

/// Shortlex comparison: first by length, ties by lexicographic order on
/// generator indices (= declaration order).
pub fn shortlex_cmp(a: &[Letter], b: &[Letter]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// True iff `a` is strictly shortlex-smaller than `b`.
pub fn shortlex_less(a: &[Letter], b: &[Letter]) -> bool {
    shortlex_cmp(a, b) == Ordering::Less
}

/// Formal inverse of a word: reverse it and invert each letter.
pub fn invert(w: &[Letter], inv: &[Letter]) -> Word {
    w.iter().rev().map(|&g| inv[g as usize]).collect()
}

/// Free reduction: repeatedly delete adjacent letter/inverse pairs.
pub fn free_reduce(w: &[Letter], inv: &[Letter]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &g in w {
        if let Some(&last) = out.last() {
            if inv[g as usize] == last {
                out.pop();
                continue;
            }
        }
        out.push(g);
    }
    out
}

/// Concatenate two words (no reduction).
pub fn concat(a: &[Letter], b: &[Letter]) -> Word {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortlex_orders_by_length_first() {
        assert!(shortlex_less(&[3], &[0, 0]));
        assert!(shortlex_less(&[0, 1], &[0, 2]));
        assert!(shortlex_less(&[], &[0]));
        assert!(!shortlex_less(&[1], &[1]));
    }

    #[test]
    fn free_reduction_cancels_pairs() {
        // alphabet a=0, A=1 with inv swapping them
        let inv = vec![1u8, 0u8];
        assert_eq!(free_reduce(&[0, 1, 0], &inv), vec![0]);
        assert_eq!(free_reduce(&[0, 0, 1, 1], &inv), Vec::<u8>::new());
    }

    #[test]
    fn invert_reverses_and_flips() {
        let inv = vec![1u8, 0u8];
        assert_eq!(invert(&[0, 0, 1], &inv), vec![0, 1, 1]);
    }
}
