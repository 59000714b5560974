//! Group presentations and the line-oriented `.grp` file format.
//!
//! ```text
//! # comment
//! gens a A b B          # ordered; the order induces shortlex
//! inv a A, b B          # involutive inverse pairing
//! rel aBAb              # one word per directive (single-char symbols join)
//! delta 1               # optional hyperbolicity estimate (rational)
//! ```

use crate::error::{Error, Result};
use crate::word::{free_reduce, invert, Letter, Word};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// A finitely presented group with an ordered, inverse-closed generating set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupPresentation {
    /// Generator names, in declaration order (this order induces shortlex).
    pub generators: Vec<String>,
    /// `inv[i]` is the index of the inverse of generator `i` (an involution).
    pub inverses: Vec<Letter>,
    /// Relator words over generator indices.
    pub relators: Vec<Word>,
    /// Optional hyperbolicity estimate as a non-negative rational
    /// (numerator, denominator), in graph-distance units. Default 1.
    pub delta: (u32, u32),
}

impl GroupPresentation {
    pub fn alphabet_size(&self) -> usize {
        self.generators.len()
    }

    /// Index of a generator by name.
    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.generators.iter().position(|g| g == name).map(|i| i as Letter)
    }

    /// Parse a whitespace-free string of single-character generator names, or
    /// a whitespace-separated sequence of (possibly multi-char) names.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "ε" || trimmed == "e" && self.letter("e").is_none() {
            return Ok(Vec::new());
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() > 1 {
            return toks
                .into_iter()
                .map(|t| {
                    self.letter(t)
                        .ok_or_else(|| Error::Input(format!("undeclared generator `{t}`")))
                })
                .collect();
        }
        let t = toks.first().copied().unwrap_or("");
        if self.letter(t).is_some() {
            return Ok(vec![self.letter(t).unwrap()]);
        }
        // Fall back to per-character parsing (requires single-char names).
        t.chars()
            .map(|c| {
                self.letter(&c.to_string())
                    .ok_or_else(|| Error::Input(format!("undeclared generator `{c}`")))
            })
            .collect()
    }

    /// Render a word using generator names.
    pub fn word_to_string(&self, w: &[Letter]) -> String {
        if w.is_empty() {
            return "ε".into();
        }
        let single = self.generators.iter().all(|g| g.chars().count() == 1);
        let sep = if single { "" } else { " " };
        w.iter()
            .map(|&g| self.generators[g as usize].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// δ as a float (for thresholds that take ceilings, use `delta` exactly).
    pub fn delta_f64(&self) -> f64 {
        self.delta.0 as f64 / self.delta.1 as f64
    }

    /// ⌈2δ⌉ in graph-distance units.
    pub fn two_delta_ceil(&self) -> u32 {
        let (p, q) = self.delta;
        (2 * p).div_ceil(q)
    }

    /// Formal inverse of a word under this presentation's pairing.
    pub fn invert_word(&self, w: &[Letter]) -> Word {
        invert(w, &self.inverses)
    }

    /// Freely reduce a word under this presentation's pairing.
    pub fn free_reduce_word(&self, w: &[Letter]) -> Word {
        free_reduce(w, &self.inverses)
    }

    fn validate(&self) -> Result<()> {
        let n = self.generators.len();
        if n == 0 {
            return Err(Error::Input("empty generator set".into()));
        }
        if self.inverses.len() != n {
            return Err(Error::Input("inverse table size mismatch".into()));
        }
        let mut seen = HashMap::new();
        for (i, g) in self.generators.iter().enumerate() {
            if let Some(j) = seen.insert(g.clone(), i) {
                return Err(Error::Input(format!(
                    "generator `{g}` declared twice (positions {j} and {i})"
                )));
            }
        }
        for (i, &j) in self.inverses.iter().enumerate() {
            if j as usize >= n {
                return Err(Error::Input("inverse index out of range".into()));
            }
            if self.inverses[j as usize] as usize != i {
                return Err(Error::Input(format!(
                    "inverse pairing is not an involution at `{}`",
                    self.generators[i]
                )));
            }
        }
        for r in &self.relators {
            if r.is_empty() {
                return Err(Error::Input("empty relator".into()));
            }
            if r.iter().any(|&g| g as usize >= n) {
                return Err(Error::Input("relator uses undeclared generator".into()));
            }
        }
        if self.delta.1 == 0 {
            return Err(Error::Input("delta denominator is zero".into()));
        }
        Ok(())
    }
}

impl fmt::Display for GroupPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "⟨{} | {}⟩",
            self.generators.join(", "),
            self.relators
                .iter()
                .map(|r| self.word_to_string(r))
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

/// Parse the `.grp` text format. Reports line numbers on failure.
pub fn parse_presentation(text: &str) -> Result<GroupPresentation> {
    if text.trim().is_empty() {
        return Err(Error::Input("empty presentation file".into()));
    }
    let mut gens: Vec<String> = Vec::new();
    let mut inv_pairs: Vec<(String, String)> = Vec::new();
    let mut relator_texts: Vec<(usize, String)> = Vec::new();
    let mut delta: (u32, u32) = (1, 1);

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| Error::Input(format!("line {}: {}", lineno + 1, msg));
        let (directive, rest) = match line.split_once(char::is_whitespace) {
            Some((d, r)) => (d, r.trim()),
            None => (line, ""),
        };
        match directive {
            "gens" => {
                if rest.is_empty() {
                    return Err(at("`gens` needs at least one symbol".into()));
                }
                gens.extend(rest.split_whitespace().map(String::from));
            }
            "inv" => {
                for pair in rest.split(',') {
                    let names: Vec<&str> = pair.split_whitespace().collect();
                    match names.as_slice() {
                        [x, y] => inv_pairs.push((x.to_string(), y.to_string())),
                        [x] => inv_pairs.push((x.to_string(), x.to_string())),
                        _ => return Err(at(format!("bad inverse pair `{pair}`"))),
                    }
                }
            }
            "rel" => {
                if rest.is_empty() {
                    return Err(at("`rel` needs a word".into()));
                }
                relator_texts.push((lineno + 1, rest.to_string()));
            }
            "delta" => {
                delta = parse_rational(rest).map_err(|m| at(m))?;
            }
            other => return Err(at(format!("unknown directive `{other}`"))),
        }
    }

    if gens.is_empty() {
        return Err(Error::Input("no `gens` directive".into()));
    }
    let index: HashMap<&str, usize> =
        gens.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let mut inverses: Vec<Option<Letter>> = vec![None; gens.len()];
    for (x, y) in &inv_pairs {
        let ix = *index
            .get(x.as_str())
            .ok_or_else(|| Error::Input(format!("`inv` names undeclared generator `{x}`")))?;
        let iy = *index
            .get(y.as_str())
            .ok_or_else(|| Error::Input(format!("`inv` names undeclared generator `{y}`")))?;
        inverses[ix] = Some(iy as Letter);
        inverses[iy] = Some(ix as Letter);
    }
    let inverses: Vec<Letter> = inverses
        .into_iter()
        .enumerate()
        .map(|(i, o)| o.ok_or_else(|| Error::Input(format!("generator `{}` has no inverse pairing", gens[i]))))
        .collect::<Result<_>>()?;

    let mut pres = GroupPresentation {
        generators: gens,
        inverses,
        relators: Vec::new(),
        delta,
    };
    for (lineno, t) in relator_texts {
        let w = pres
            .parse_word(&t)
            .map_err(|e| Error::Input(format!("line {lineno}: {e}")))?;
        if w.is_empty() {
            return Err(Error::Input(format!("line {lineno}: empty relator")));
        }
        pres.relators.push(w);
    }
    pres.validate()?;
    Ok(pres)
}

fn parse_rational(s: &str) -> std::result::Result<(u32, u32), String> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: u32 = p.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
        let q: u32 = q.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
        if q == 0 {
            return Err("zero denominator".into());
        }
        return Ok((p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let scale = 10u32
            .checked_pow(frac.len() as u32)
            .ok_or_else(|| format!("rational `{s}` too precise"))?;
        let int: u32 = if int.is_empty() { 0 } else { int.parse().map_err(|_| format!("bad rational `{s}`"))? };
        let frac: u32 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| format!("bad rational `{s}`"))? };
        return Ok((int * scale + frac, scale));
    }
    let p: u32 = s.parse().map_err(|_| format!("bad rational `{s}`"))?;
    Ok((p, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z2: &str = "gens a A b B\ninv a A, b B\nrel abAB\n";
    const F2: &str = "gens a A b B\ninv a A, b B\n";
    const GENUS2: &str = "gens a A c C b B d D\ninv a A, c C, b B, d D\nrel abABcdCD\ndelta 2\n";

    #[test]
    fn parses_commutator_presentation() {
        let p = parse_presentation(Z2).unwrap();
        assert_eq!(p.generators, vec!["a", "A", "b", "B"]);
        assert_eq!(p.relators.len(), 1);
        assert_eq!(p.word_to_string(&p.relators[0]), "abAB");
        assert_eq!(p.delta, (1, 1));
    }

    #[test]
    fn parses_free_group_with_no_relators() {
        let p = parse_presentation(F2).unwrap();
        assert!(p.relators.is_empty());
    }

    #[test]
    fn parses_surface_presentation_with_eight_generators() {
        let p = parse_presentation(GENUS2).unwrap();
        assert_eq!(p.alphabet_size(), 8);
        assert_eq!(p.relators[0].len(), 8);
        assert_eq!(p.two_delta_ceil(), 4);
    }

    #[test]
    fn rejects_undeclared_relator_letters() {
        let err = parse_presentation("gens a A\ninv a A\nrel ax\n").unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn rejects_broken_involution() {
        // a -> b, b -> a leaves c self-paired? Here: pairing not involutive.
        let err = parse_presentation("gens a b c\ninv a b, b c\n").unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn rejects_unknown_directive_with_line_number() {
        let err = parse_presentation("gens a A\ninv a A\nfoo bar\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn parses_fractional_delta() {
        let p = parse_presentation("gens a A\ninv a A\ndelta 3/2\n").unwrap();
        assert_eq!(p.delta, (3, 2));
        assert_eq!(p.two_delta_ceil(), 3);
        let p = parse_presentation("gens a A\ninv a A\ndelta 1.5\n").unwrap();
        assert_eq!(p.delta, (15, 10));
        assert_eq!(p.two_delta_ceil(), 3);
    }

    #[test]
    fn roundtrips_words() {
        let p = parse_presentation(GENUS2).unwrap();
        let w = p.parse_word("abAB").unwrap();
        assert_eq!(p.word_to_string(&w), "abAB");
        let rr = p.invert_word(&w);
        assert_eq!(p.word_to_string(&rr), "baBA");
        assert!(p.free_reduce_word(&crate::word::concat(&w, &rr)).is_empty());
    }
}
