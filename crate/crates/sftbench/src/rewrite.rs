//! Shortlex string rewriting: Knuth–Bendix completion with budgets, and
//! normal-form reduction for confluent systems.
//!
//! Every rule strictly decreases shortlex order, so rewriting terminates; when
//! completion drains its critical-pair queue, the system is locally confluent
//! and hence (by termination) confluent, and reduction computes the unique,
//! shortlex-least normal form of each group element.

use crate::error::{Error, Result};
use crate::presentation::GroupPresentation;
use crate::word::{concat, shortlex_cmp, shortlex_less, Letter, Word};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

/// A shortlex rewriting system produced by completion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewritingSystem {
    pub presentation: GroupPresentation,
    /// Rules (lhs, rhs) with rhs strictly shortlex-smaller than lhs, sorted by
    /// shortlex order of the lhs for reproducibility.
    pub rules: Vec<(Word, Word)>,
    /// True iff completion drained all critical pairs within budget.
    pub confluent: bool,
    /// True iff a budget (rule count, length cap, or pair cap) was exhausted.
    pub cap_hit: bool,
}

/// Default completion budgets.
pub const DEFAULT_MAX_RULES: usize = 20_000;
pub const DEFAULT_MAX_LEN: usize = 64;

struct Reducer<'a> {
    rules: &'a HashMap<Word, Word>,
    max_lhs: usize,
}

impl<'a> Reducer<'a> {
    fn reduce(&self, w: &[Letter]) -> Word {
        let mut stack: Word = Vec::with_capacity(w.len());
        let mut pending: Word = w.iter().rev().copied().collect();
        while let Some(g) = pending.pop() {
            stack.push(g);
            // Rewrite suffixes until none matches (longest first).
            'rescan: loop {
                let top = stack.len().min(self.max_lhs);
                for l in (1..=top).rev() {
                    let start = stack.len() - l;
                    if let Some(rhs) = self.rules.get(&stack[start..]) {
                        stack.truncate(start);
                        // Feed the replacement back through the input stream.
                        pending.extend(rhs.iter().rev());
                        if pending.is_empty() {
                            continue 'rescan;
                        }
                        break 'rescan;
                    }
                }
                break;
            }
        }
        stack
    }
}

fn reduce_with(rules: &HashMap<Word, Word>, w: &[Letter]) -> Word {
    let max_lhs = rules.keys().map(Word::len).max().unwrap_or(0);
    Reducer { rules, max_lhs }.reduce(w)
}

/// Run shortlex Knuth–Bendix completion from a presentation.
///
/// Budget exhaustion is not an error: the result carries `cap_hit = true` and
/// `confluent = false`, and downstream operations that require confluence
/// refuse it with a consistency error.
pub fn kb_complete(
    pres: &GroupPresentation,
    max_rules: usize,
    max_len: usize,
) -> Result<RewritingSystem> {
    if max_rules == 0 || max_len == 0 {
        return Err(Error::Input("completion budgets must be positive".into()));
    }
    if pres.generators.is_empty() {
        return Err(Error::Input("empty generator set".into()));
    }

    let mut rules: HashMap<Word, Word> = HashMap::new();
    // Fair queue: pairs ordered by (max side length, total length, sequence).
    type Entry = Reverse<(usize, usize, u64, Word, Word)>;
    let mut queue: BinaryHeap<Entry> = BinaryHeap::new();
    let mut enqueued: HashSet<(Word, Word)> = HashSet::new();
    let mut seq: u64 = 0;

    let push = |queue: &mut BinaryHeap<Entry>,
                    enqueued: &mut HashSet<(Word, Word)>,
                    seq: &mut u64,
                    u: Word,
                    v: Word| {
        let key = if shortlex_less(&u, &v) { (v.clone(), u.clone()) } else { (u.clone(), v.clone()) };
        if enqueued.insert(key) {
            let m = u.len().max(v.len());
            let t = u.len() + v.len();
            queue.push(Reverse((m, t, *seq, u, v)));
            *seq += 1;
        }
    };

    for g in 0..pres.alphabet_size() as Letter {
        let pair = vec![g, pres.inverses[g as usize]];
        push(&mut queue, &mut enqueued, &mut seq, pair, Word::new());
    }
    for r in &pres.relators {
        push(&mut queue, &mut enqueued, &mut seq, r.clone(), Word::new());
    }

    let mut cap_hit = false;
    let pair_budget = max_rules.saturating_mul(400).max(100_000);
    let mut pops: usize = 0;

    while let Some(Reverse((_, _, _, u, v))) = queue.pop() {
        pops += 1;
        if pops > pair_budget {
            cap_hit = true;
            break;
        }
        let (u, v) = (reduce_with(&rules, &u), reduce_with(&rules, &v));
        if u == v {
            continue;
        }
        let (lhs, rhs) = match shortlex_cmp(&u, &v) {
            std::cmp::Ordering::Greater => (u, v),
            _ => (v, u),
        };
        if lhs.len() > max_len {
            // The queue is ordered by side length: everything remaining is at
            // least this long, so the completion cannot finish in budget.
            cap_hit = true;
            break;
        }
        if rules.len() >= max_rules {
            cap_hit = true;
            break;
        }

        // Interreduction: retire rules whose sides the new rule touches.
        let mut requeue: Vec<(Word, Word)> = Vec::new();
        rules.retain(|l, r| {
            let touched = contains_factor(l, &lhs) || contains_factor(r, &lhs);
            if touched {
                requeue.push((l.clone(), r.clone()));
            }
            !touched
        });
        for (l, r) in requeue {
            push(&mut queue, &mut enqueued, &mut seq, l, r);
        }

        rules.insert(lhs.clone(), rhs.clone());

        // Critical pairs of the new rule against every live rule (and itself).
        let snapshot: Vec<(Word, Word)> =
            rules.iter().map(|(l, r)| (l.clone(), r.clone())).collect();
        for (l2, r2) in snapshot {
            for ((la, ra), (lb, rb)) in
                [((&lhs, &rhs), (&l2, &r2)), ((&l2, &r2), (&lhs, &rhs))]
            {
                // Overlap: a proper suffix of la equals a proper prefix of lb.
                for k in 1..la.len().min(lb.len()) {
                    if la[la.len() - k..] == lb[..k] {
                        let left = concat(ra, &lb[k..]);
                        let right = concat(&la[..la.len() - k], rb);
                        push(&mut queue, &mut enqueued, &mut seq, left, right);
                    }
                }
                // Containment: lb occurs strictly inside la.
                if la != lb && la.len() > lb.len() {
                    for i in 0..=la.len() - lb.len() {
                        if &la[i..i + lb.len()] == lb.as_slice() {
                            let mut right = la[..i].to_vec();
                            right.extend_from_slice(rb);
                            right.extend_from_slice(&la[i + lb.len()..]);
                            push(&mut queue, &mut enqueued, &mut seq, ra.clone(), right);
                        }
                    }
                }
            }
        }
    }

    let confluent = !cap_hit;
    let mut rule_vec: Vec<(Word, Word)> = rules.into_iter().collect();
    rule_vec.sort_by(|a, b| shortlex_cmp(&a.0, &b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(RewritingSystem {
        presentation: pres.clone(),
        rules: rule_vec,
        confluent,
        cap_hit,
    })
}

fn contains_factor(hay: &[Letter], needle: &[Letter]) -> bool {
    hay.len() >= needle.len()
        && (0..=hay.len() - needle.len()).any(|i| &hay[i..i + needle.len()] == needle)
}

impl RewritingSystem {
    /// Shortlex normal form of `w`. Requires confluence.
    pub fn reduce(&self, w: &[Letter]) -> Result<Word> {
        if !self.confluent {
            return Err(Error::Consistency(
                "rewriting system is not confluent; normal forms are not well-defined".into(),
            ));
        }
        if w.iter().any(|&g| g as usize >= self.presentation.alphabet_size()) {
            return Err(Error::Input("word uses undeclared generator".into()));
        }
        Ok(self.reduce_unchecked(w))
    }

    /// Reduction without the confluence gate (for internal search use).
    pub fn reduce_unchecked(&self, w: &[Letter]) -> Word {
        let map: HashMap<Word, Word> = self.rules.iter().cloned().collect();
        reduce_with(&map, w)
    }

    /// A reusable reducer that avoids rebuilding the rule map per call.
    pub fn reducer(&self) -> CompiledReducer {
        CompiledReducer {
            map: self.rules.iter().cloned().collect(),
            max_lhs: self.rules.iter().map(|(l, _)| l.len()).max().unwrap_or(0),
        }
    }

    /// True iff `w` is already a normal form (no rule applies anywhere).
    pub fn is_normal_form(&self, w: &[Letter]) -> bool {
        self.reducer().is_normal_form(w)
    }

    /// Do two words represent the same group element? Requires confluence.
    pub fn words_equal(&self, u: &[Letter], v: &[Letter]) -> Result<bool> {
        Ok(self.reduce(u)? == self.reduce(v)?)
    }
}

/// Rule map compiled for repeated reduction calls.
pub struct CompiledReducer {
    map: HashMap<Word, Word>,
    max_lhs: usize,
}

impl CompiledReducer {
    pub fn reduce(&self, w: &[Letter]) -> Word {
        Reducer { rules: &self.map, max_lhs: self.max_lhs }.reduce(w)
    }

    pub fn is_normal_form(&self, w: &[Letter]) -> bool {
        if w.is_empty() {
            return true;
        }
        for i in 0..w.len() {
            for l in 1..=self.max_lhs.min(w.len() - i) {
                if self.map.contains_key(&w[i..i + l]) {
                    return false;
                }
            }
        }
        true
    }
}
