//! Growth analysis of a word acceptor: spectral radius by power iteration,
//! per-state growth classification, a Perron–Frobenius-style state measure,
//! and the exact algebraic test behind the choice of the ladder base q.

use crate::acceptor::{GrowthClass, WordAcceptor};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Default tolerance for λ itself.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Looser tolerance for comparing sub-automaton spectral radii to λ.
pub const CLASSIFY_TOL: f64 = 1e-6;

/// Spectral radius of the acceptor's transition count matrix. The matrix is
/// split into strongly connected components; each nontrivial component is
/// irreducible, so power iteration on the component plus the identity yields
/// certified Collatz–Wielandt bounds that close geometrically. λ is the
/// maximum over components, with absolute error below `tol`. Errors when the
/// accepted language is finite (no component carries a cycle).
pub fn growth_rate(acc: &WordAcceptor, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::Input("tolerance must be positive".into()));
    }
    let m = acc.count_matrix();
    let sccs = tarjan_sccs(&m);
    let mut best: Option<f64> = None;
    for comp in &sccs {
        if let Some(rho) = scc_spectral_radius(&m, comp, tol)? {
            best = Some(best.map_or(rho, |b: f64| b.max(rho)));
        }
    }
    best.ok_or_else(|| {
        Error::Consistency(
            "finite group: the accepted language is finite (acceptor has no cycle)".into(),
        )
    })
}

/// Spectral radius of one strongly connected component, or None when the
/// component carries no cycle (a single state without a self-loop).
fn scc_spectral_radius(m: &[Vec<u64>], comp: &[usize], tol: f64) -> Result<Option<f64>> {
    if comp.len() == 1 {
        let s = comp[0];
        return Ok(if m[s][s] > 0 {
            Some(m[s][s] as f64)
        } else {
            None
        });
    }
    let k = comp.len();
    let sub: Vec<Vec<u64>> = comp
        .iter()
        .map(|&i| comp.iter().map(|&j| m[i][j]).collect())
        .collect();
    // Power iteration on A = sub + I (primitive, since the block is
    // irreducible and A has a positive diagonal). For a positive vector v,
    // min_i (Av)_i/v_i ≤ ρ(A) ≤ max_i (Av)_i/v_i, and the bounds close
    // geometrically.
    let mut v = vec![1.0f64; k];
    for _ in 0..1_000_000 {
        let mut w = vec![0.0f64; k];
        for i in 0..k {
            let mut acc = v[i]; // +I
            for j in 0..k {
                if sub[i][j] != 0 {
                    acc += sub[i][j] as f64 * v[j];
                }
            }
            w[i] = acc;
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..k {
            let q = w[i] / v[i];
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if hi - lo < tol {
            return Ok(Some((lo + hi) / 2.0 - 1.0));
        }
        let norm: f64 = w.iter().sum::<f64>() / k as f64;
        for x in &mut w {
            *x /= norm;
        }
        v = w;
    }
    Err(Error::Budget(
        "power iteration did not converge within the step budget".into(),
    ))
}

/// Tag every state with its growth class: the spectral radius of the
/// sub-automaton reachable from the state, compared against λ.
pub fn classify_states(acc: &WordAcceptor, tol: f64) -> Result<WordAcceptor> {
    let m = acc.count_matrix();
    let n = acc.states;

    let sccs = tarjan_sccs(&m);
    // Spectral radius per SCC (0 for trivial SCCs without self-loops).
    let mut scc_rho = vec![0.0f64; sccs.len()];
    for (k, comp) in sccs.iter().enumerate() {
        scc_rho[k] = scc_spectral_radius(&m, comp, DEFAULT_TOL)?.unwrap_or(0.0);
    }
    let lambda = match acc.lambda {
        Some(l) => l,
        None => scc_rho.iter().cloned().fold(0.0f64, f64::max).max(1.0),
    };
    // Max reachable SCC radius, via DP over the condensation (Tarjan emits
    // components in reverse topological order).
    let mut comp_of = vec![0usize; n];
    for (k, comp) in sccs.iter().enumerate() {
        for &s in comp {
            comp_of[s] = k;
        }
    }
    let mut reach_cycle: Vec<bool> = sccs
        .iter()
        .map(|comp| comp.len() > 1 || m[comp[0]][comp[0]] > 0)
        .collect();
    for k in 0..sccs.len() {
        // Tarjan order: successors of component k appear before k.
        for &s in &sccs[k] {
            for t in 0..n {
                if m[s][t] > 0 && comp_of[t] != k && reach_cycle[comp_of[t]] {
                    reach_cycle[k] = true;
                }
            }
        }
    }

    // A state is maximal when it is recurrent at the top rate: its own
    // component's spectral radius reaches λ. Transient states (the initial
    // state in particular) are never maximal, even though words through
    // them grow at λ.
    let growth_class = (0..n)
        .map(|s| {
            let k = comp_of[s];
            if !reach_cycle[k] {
                GrowthClass::Finite
            } else if scc_rho[k] >= lambda - tol {
                GrowthClass::Maximal
            } else {
                GrowthClass::Submaximal
            }
        })
        .collect();
    let mut out = acc.clone();
    out.growth_class = growth_class;
    out.lambda = Some(lambda);
    Ok(out)
}

/// Tarjan strongly connected components (emitted in reverse topological
/// order: every edge leaving a component points to an earlier component).
fn tarjan_sccs(m: &[Vec<u64>]) -> Vec<Vec<usize>> {
    let n = m.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut out: Vec<Vec<usize>> = Vec::new();
    // Iterative Tarjan.
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (u, ref mut j)) = call.last_mut() {
            if *j < n {
                let v = *j;
                *j += 1;
                if m[u][v] == 0 {
                    continue;
                }
                if index[v] == usize::MAX {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push((v, 0));
                } else if on_stack[v] && index[v] < low[u] {
                    low[u] = index[v];
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    if low[u] < low[p] {
                        low[p] = low[u];
                    }
                }
                if low[u] == index[u] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(w);
                        if w == u {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Left Perron–Frobenius-style measure on maximal states: the left
/// eigenvector of the maximal-class restriction, normalized to sum 1 over
/// maximal states (zero elsewhere).
pub fn state_measure(acc: &WordAcceptor) -> Result<Vec<f64>> {
    if acc.growth_class.len() != acc.states {
        return Err(Error::Consistency(
            "state measure requires a classified acceptor".into(),
        ));
    }
    let maximal: Vec<usize> = (0..acc.states)
        .filter(|&s| acc.growth_class[s] == GrowthClass::Maximal)
        .collect();
    if maximal.is_empty() {
        return Err(Error::Consistency("no maximal states".into()));
    }
    let m = acc.count_matrix();
    let k = maximal.len();
    let mut v = vec![1.0f64; k];
    for _ in 0..100_000 {
        let mut w = vec![0.0f64; k];
        for (ii, &i) in maximal.iter().enumerate() {
            for (jj, &j) in maximal.iter().enumerate() {
                if m[i][j] != 0 {
                    // left action: w[j] += v[i] · M[i][j]
                    w[jj] += v[ii] * m[i][j] as f64;
                }
            }
            w[ii] += v[ii]; // +I for aperiodicity
        }
        let norm: f64 = w.iter().sum();
        if norm == 0.0 {
            return Err(Error::Consistency("measure iteration collapsed".into()));
        }
        for x in &mut w {
            *x /= norm;
        }
        let delta: f64 = v.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum();
        v = w;
        if delta < 1e-13 {
            break;
        }
    }
    let mut out = vec![0.0f64; acc.states];
    for (ii, &i) in maximal.iter().enumerate() {
        out[i] = v[ii];
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exact integer linear algebra: characteristic polynomial and resultants.
// ---------------------------------------------------------------------------

/// Characteristic polynomial of an integer matrix, little-endian coefficients
/// (constant term first, leading coefficient 1), by the Faddeev–LeVerrier
/// recurrence over exact integers.
pub fn char_poly(m: &[Vec<u64>]) -> Vec<BigInt> {
    let n = m.len();
    let a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    if n == 0 {
        return coeffs;
    }
    let mut mk: Vec<Vec<BigInt>> = a.clone(); // M_1 = A
    let mut ck = -trace(&mk); // c_{n-1}
    coeffs[n - 1] = ck.clone();
    for k in 2..=n {
        // M_k = A · (M_{k-1} + c_{n-k+1} I)
        let mut shifted = mk.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += &ck;
        }
        mk = mat_mul(&a, &shifted);
        ck = -trace(&mk) / BigInt::from(k as i64); // exact division
        coeffs[n - k] = ck.clone();
    }
    coeffs
}

fn trace(m: &[Vec<BigInt>]) -> BigInt {
    m.iter().enumerate().map(|(i, row)| row[i].clone()).sum()
}

fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    out[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    out
}

/// Resultant of two integer polynomials (little-endian), via fraction-free
/// Gaussian elimination (Bareiss) on the Sylvester matrix.
pub fn resultant(p: &[BigInt], q: &[BigInt]) -> BigInt {
    let p = trim(p);
    let q = trim(q);
    let (dp, dq) = (p.len() - 1, q.len() - 1);
    if dp == 0 && dq == 0 {
        return BigInt::one();
    }
    if dp == 0 {
        return p[0].clone().pow(dq as u32);
    }
    if dq == 0 {
        return q[0].clone().pow(dp as u32);
    }
    let n = dp + dq;
    let mut s = vec![vec![BigInt::zero(); n]; n];
    for i in 0..dq {
        for (k, c) in p.iter().rev().enumerate() {
            s[i][i + k] = c.clone();
        }
    }
    for i in 0..dp {
        for (k, c) in q.iter().rev().enumerate() {
            s[dq + i][i + k] = c.clone();
        }
    }
    bareiss_det(s)
}

fn trim(p: &[BigInt]) -> Vec<BigInt> {
    let mut v = p.to_vec();
    while v.len() > 1 && v.last().map(|c| c.is_zero()).unwrap_or(false) {
        v.pop();
    }
    v
}

fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1i64;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            // pivot search
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = t / &prev; // exact by Bareiss
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Evaluate an integer polynomial at an integer point.
pub fn eval_poly(p: &[BigInt], x: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Exact sign of p(num/den) for den > 0, via the homogenized integer value
/// Σ c_i · num^i · den^(deg−i).
fn sign_at(p: &[BigInt], num: &BigInt, den: &BigInt) -> i32 {
    let deg = p.len() - 1;
    let mut total = BigInt::zero();
    let mut np = BigInt::one();
    for (i, c) in p.iter().enumerate() {
        total += c * &np * den.pow((deg - i) as u32);
        np *= num;
    }
    match total.sign() {
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
        num_bigint::Sign::Plus => 1,
    }
}

/// Remainder of lc(b)^e · a divided by b, with e ≥ deg(a) − deg(b) + 1 chosen
/// so that the scale factor lc(b)^e is positive. Division is then exact over
/// the integers, and a positive scale keeps the sign pattern of the remainder
/// usable in a Sturm chain.
fn pseudo_rem_positive(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let lc = b.last().unwrap().clone();
    let d = a.len() - b.len();
    let mut e = (d + 1) as u32;
    if lc.sign() == num_bigint::Sign::Minus && e % 2 == 1 {
        e += 1;
    }
    let scale = lc.pow(e);
    let mut r: Vec<BigInt> = a.iter().map(|c| c * &scale).collect();
    while r.len() >= b.len() {
        let top = r.last().unwrap().clone();
        if top.is_zero() {
            r.pop();
            continue;
        }
        let q = &top / &lc; // exact thanks to the upfront scale
        let shift = r.len() - b.len();
        for (i, c) in b.iter().enumerate() {
            let t = &r[shift + i] - &q * c;
            r[shift + i] = t;
        }
        r.pop();
    }
    if r.is_empty() {
        return vec![BigInt::zero()];
    }
    trim(&r)
}

/// Divide a polynomial by the (positive) gcd of its coefficients.
fn primitive_part(p: &[BigInt]) -> Vec<BigInt> {
    let gcd = |mut a: BigInt, mut b: BigInt| {
        while !b.is_zero() {
            let t = &a % &b;
            a = b;
            b = t;
        }
        a.abs()
    };
    let mut g = BigInt::zero();
    for c in p {
        g = gcd(g, c.clone());
    }
    if g.is_zero() || g.is_one() {
        return p.to_vec();
    }
    p.iter().map(|c| c / &g).collect()
}

/// Sturm chain of an integer polynomial: p, p′, then successive negated
/// pseudo-remainders (scaled by positive factors only, so sign-variation
/// counts are preserved), each reduced to its primitive part.
fn sturm_chain(p: &[BigInt]) -> Vec<Vec<BigInt>> {
    let mut chain = vec![p.to_vec(), trim(&derivative(p))];
    while chain.last().unwrap().len() > 1 || !chain.last().unwrap()[0].is_zero() {
        let n = chain.len();
        if chain[n - 1].iter().all(num_traits::Zero::is_zero) {
            chain.pop();
            break;
        }
        if chain[n - 2].len() < chain[n - 1].len() {
            break;
        }
        let r = pseudo_rem_positive(&chain[n - 2], &chain[n - 1]);
        if r.len() == 1 && r[0].is_zero() {
            break;
        }
        let neg: Vec<BigInt> = r.iter().map(|c| -c).collect();
        chain.push(primitive_part(&neg));
    }
    chain
}

fn derivative(p: &[BigInt]) -> Vec<BigInt> {
    if p.len() <= 1 {
        return vec![BigInt::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigInt::from(i))
        .collect()
}

/// Sign variations of the Sturm chain at num/den (den > 0), zeros skipped.
fn variations_at(chain: &[Vec<BigInt>], num: &BigInt, den: &BigInt) -> usize {
    let mut vars = 0;
    let mut last = 0i32;
    for member in chain {
        let s = sign_at(member, num, den);
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            vars += 1;
        }
        last = s;
    }
    vars
}

/// The largest real root of an integer polynomial, isolated by an exact Sturm
/// chain over dyadic rationals and bisected until the bracket is narrower
/// than `tol`. Counts distinct roots, so repeated and clustered real roots
/// (and real roots below the largest, such as an eigenvalue 1 of a transition
/// matrix) never mislead the bracketing.
pub fn largest_real_root(p: &[BigInt], tol: f64) -> Result<f64> {
    let p = trim(p);
    let deg = p.len() - 1;
    if deg == 0 {
        return Err(Error::Input("constant polynomial has no root".into()));
    }
    // Cauchy bound: every real root lies strictly inside [−M, M] with
    // M = 2 + max |c_i| / |lead|.
    let lead = p.last().unwrap().clone();
    let max_c = p[..deg]
        .iter()
        .map(|c| c.abs())
        .max()
        .unwrap_or_else(BigInt::zero);
    let bound = BigInt::one() + ceil_div(&max_c, &lead.abs()) + 1;
    let chain = sturm_chain(&p);
    let one = BigInt::one();
    let v_top = variations_at(&chain, &bound, &one);
    // Roots strictly above num/den (valid whenever p(num/den) ≠ 0).
    let roots_above =
        |num: &BigInt, den: &BigInt| variations_at(&chain, num, den) as i64 - v_top as i64;
    if roots_above(&-&bound, &one) <= 0 {
        return Err(Error::Consistency("polynomial has no real roots".into()));
    }
    let (mut lo, mut hi) = (-&bound, bound.clone());
    let mut den = BigInt::one();
    loop {
        let width = bigint_to_f64(&(&hi - &lo)) / bigint_to_f64(&den);
        if width < tol {
            let mid = (bigint_to_f64(&lo) + bigint_to_f64(&hi)) / (2.0 * bigint_to_f64(&den));
            return Ok(mid);
        }
        lo *= 2;
        hi *= 2;
        den *= 2;
        let mut mid = (&lo + &hi) / BigInt::from(2);
        let mut mid_den = den.clone();
        // Sturm counting needs p(mid) ≠ 0; nudge the probe upward by ever
        // smaller dyadic steps until it misses every root (at most deg of the
        // candidates can be roots, so this terminates).
        let mut nudges = 0;
        while sign_at(&p, &mid, &mid_den) == 0 {
            nudges += 1;
            if nudges > deg + 1 {
                return Ok(bigint_to_f64(&mid) / bigint_to_f64(&mid_den));
            }
            mid = mid * 2 + 1;
            mid_den *= 2;
        }
        if roots_above(&mid, &mid_den) >= 1 {
            // The largest root is above the probe; the probe is at or above
            // the midpoint, so the original midpoint is a sound lower bound.
            lo = (&lo + &hi) / BigInt::from(2);
        } else {
            // No roots above the probe. The probe exceeds the midpoint by
            // less than one dyadic step; widen hi by one step to stay sound.
            hi = (&lo + &hi) / BigInt::from(2) + 1;
        }
    }
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    (a + b - BigInt::one()) / b
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::MAX)
}

// ---------------------------------------------------------------------------
// The ladder base q.
// ---------------------------------------------------------------------------

/// Outcome of the exact exponent-ladder test for a candidate base.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QChoice {
    /// The chosen base (2 unless 2 collides with λ's exponent ladder).
    pub q: u32,
    /// Exponent pairs (q, a, b) for which λ^b = q^a was detected, i.e. the
    /// collisions that disqualified a base.
    pub collisions: Vec<(u32, u32, u32)>,
    /// Number of exponent pairs verified collision-free for the chosen base.
    pub verified_pairs: u32,
}

/// Maximum exponent tested on each side of the ladder.
pub const Q_EXPONENT_RANGE: u32 = 16;

/// Choose q ∈ {2, 3} such that log_q(λ) is irrational as far as the exponent
/// ladder test sees: for all 1 ≤ a, b ≤ 16, λ^b ≠ q^a.
///
/// λ is an algebraic integer — a root of the characteristic polynomial of the
/// acceptor's transition matrix restricted to maximal states. If the
/// resultant of that polynomial with y^b − q^a is nonzero, no root collides,
/// so λ^b ≠ q^a exactly. A zero resultant means some companion root collides;
/// the collision is charged to λ itself when the numeric value agrees.
pub fn choose_q(lambda: f64, acc: &WordAcceptor) -> Result<QChoice> {
    if lambda <= 1.0 {
        return Err(Error::Input("q selection requires λ > 1".into()));
    }
    let classified = if acc.growth_class.len() == acc.states {
        acc.clone()
    } else {
        classify_states(acc, CLASSIFY_TOL)?
    };
    let m = classified.count_matrix();
    let maximal: Vec<usize> = (0..classified.states)
        .filter(|&s| classified.growth_class[s] == GrowthClass::Maximal)
        .collect();
    let sub: Vec<Vec<u64>> = maximal
        .iter()
        .map(|&i| maximal.iter().map(|&j| m[i][j]).collect())
        .collect();
    let chi = char_poly(&sub);

    let mut all_collisions = Vec::new();
    for q in [2u32, 3u32] {
        let mut collisions = Vec::new();
        let mut verified = 0u32;
        for b in 1..=Q_EXPONENT_RANGE {
            for a in 1..=Q_EXPONENT_RANGE {
                // y^b − q^a, little-endian
                let mut pol = vec![BigInt::zero(); b as usize + 1];
                pol[0] = -BigInt::from(q).pow(a);
                pol[b as usize] = BigInt::one();
                let r = resultant(&chi, &pol);
                if r.is_zero() {
                    // Charge to λ only when numerics agree.
                    let lhs = lambda.powi(b as i32);
                    let rhs = (q as f64).powi(a as i32);
                    if (lhs - rhs).abs() <= 1e-6 * rhs.max(lhs) {
                        collisions.push((q, a, b));
                    } else {
                        verified += 1; // companion-root collision, not λ
                    }
                } else {
                    verified += 1;
                }
            }
        }
        if collisions.is_empty() {
            return Ok(QChoice {
                q,
                collisions: all_collisions,
                verified_pairs: verified,
            });
        }
        all_collisions.extend(collisions);
    }
    Err(Error::Consistency(format!(
        "both q = 2 and q = 3 collide with λ's exponent ladder: {:?}",
        all_collisions
    )))
}
