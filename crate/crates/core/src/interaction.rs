//! Translation-invariant families of local terms.
//!
//! [`Terms`] is the common currency: a finite list of local terms (a table on
//! a finite site set) plus power-law pair families `c n^{-alpha} T[x][y]` on
//! the pairs `{0, n}`. Each term stands for all of its translates. An
//! [`Interaction`] is a `Terms` read as `{Phi_V}`; potentials carry a `Terms`
//! read as "sum of the terms anchored at site 0".
//!
//! Pair tails over a constant or periodic background are summed in closed
//! form with the Hurwitz zeta function, so no sum here is ever truncated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{periodic_power_tail, Bounded};
use crate::shift::{checked_count, Alphabet, Config, Pattern, Symbol, Window};

/// Value with a rigorous absolute error bound.
pub type EvalResult = Bounded;

/// Read access to a configuration, optionally patched on a window.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    base: &'a Config,
    patch: Option<(i64, &'a [Symbol])>,
}

impl<'a> View<'a> {
    pub(crate) fn of(base: &'a Config) -> Self {
        View { base, patch: None }
    }

    pub(crate) fn patched(base: &'a Config, lo: i64, letters: &'a [Symbol]) -> Self {
        View { base, patch: Some((lo, letters)) }
    }

    #[inline]
    pub(crate) fn get(&self, i: i64) -> Symbol {
        if let Some((lo, letters)) = self.patch {
            let off = i - lo;
            if off >= 0 && (off as usize) < letters.len() {
                return letters[off as usize];
            }
        }
        self.base.get(i)
    }

    /// The configuration this view reads.
    pub(crate) fn materialize(&self) -> Config {
        match self.patch {
            None => self.base.clone(),
            Some((lo, letters)) => {
                let w = Window::new(lo, lo + letters.len() as i64 - 1).expect("non-empty patch");
                self.base.with_pattern(&Pattern::new(w, letters.to_vec()).expect("matching length"))
            }
        }
    }

    fn span(&self) -> Option<(i64, i64)> {
        let e = self.base.extent();
        match (e, self.patch) {
            (e, None) => e,
            (None, Some((lo, l))) => Some((lo, lo + l.len() as i64 - 1)),
            (Some((a, b)), Some((lo, l))) => Some((a.min(lo), b.max(lo + l.len() as i64 - 1))),
        }
    }
}

/// `sum_{n=from}^{to} n^{-alpha} g(view(i + n))`.
pub(crate) fn right_sum(
    view: &View,
    i: i64,
    alpha: f64,
    from: u64,
    to: Option<u64>,
    g: impl Fn(Symbol) -> f64,
) -> Bounded {
    let n0 = match view.span() {
        Some((_, hi)) => from.max((hi - i + 1).max(0) as u64),
        None => from,
    };
    let explicit_end = to.map_or(n0, |t| n0.min(t + 1));
    let mut s = 0.0;
    for n in from..explicit_end {
        s += (n as f64).powf(-alpha) * g(view.get(i + n as i64));
    }
    let mut out = Bounded::exact(s);
    if to.is_none_or(|t| t >= n0) {
        let bg = view.base.right();
        let weights = |m: u64| -> Vec<f64> { (0..bg.period() as i64).map(|r| g(bg.at(i + m as i64 + r))).collect() };
        out = out + periodic_power_tail(alpha, n0, &weights(n0));
        if let Some(t) = to {
            out = out - periodic_power_tail(alpha, t + 1, &weights(t + 1));
        }
    }
    out
}

/// `sum_{n=from}^{to} n^{-alpha} g(view(i - n))`.
pub(crate) fn left_sum(
    view: &View,
    i: i64,
    alpha: f64,
    from: u64,
    to: Option<u64>,
    g: impl Fn(Symbol) -> f64,
) -> Bounded {
    if to.is_some_and(|t| t < from) {
        return Bounded::ZERO;
    }
    let n0 = match view.span() {
        Some((lo, _)) => from.max((i - lo + 1).max(0) as u64),
        None => from,
    };
    let explicit_end = to.map_or(n0, |t| n0.min(t + 1));
    let mut s = 0.0;
    for n in from..explicit_end {
        s += (n as f64).powf(-alpha) * g(view.get(i - n as i64));
    }
    let mut out = Bounded::exact(s);
    if to.is_none_or(|t| t >= n0) {
        let bg = view.base.left();
        let weights = |m: u64| -> Vec<f64> { (0..bg.period() as i64).map(|r| g(bg.at(i - m as i64 - r))).collect() };
        out = out + periodic_power_tail(alpha, n0, &weights(n0));
        if let Some(t) = to {
            out = out - periodic_power_tail(alpha, t + 1, &weights(t + 1));
        }
    }
    out
}

/// A function of the letters on a finite site set, standing for all its
/// translates. Sites are stored ascending with the smallest at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTerm {
    sites: Vec<i64>,
    table: Vec<f64>,
}

impl LocalTerm {
    /// `table` is indexed lexicographically by the letters on `sites` (in the
    /// given ascending order). The set is translated so its minimum is 0.
    pub fn new(sites: Vec<i64>, table: Vec<f64>, alphabet_size: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidInput("local term needs at least one site".into()));
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("local term sites must be strictly increasing".into()));
        }
        let expected = checked_count(alphabet_size, sites.len(), 1 << 24)?;
        if table.len() != expected {
            return Err(Error::InvalidInput(format!(
                "local term on {} sites needs {expected} table entries, got {}",
                sites.len(),
                table.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("local term table has a non-finite entry".into()));
        }
        let m = sites[0];
        Ok(LocalTerm { sites: sites.into_iter().map(|s| s - m).collect(), table })
    }

    pub fn from_fn(sites: Vec<i64>, alphabet_size: usize, f: impl Fn(&[Symbol]) -> f64) -> Result<Self> {
        let count = checked_count(alphabet_size, sites.len(), 1 << 24)?;
        let w = Window::new(0, sites.len() as i64 - 1)?;
        let table = (0..count).map(|idx| f(Pattern::from_index(w, alphabet_size, idx).letters())).collect();
        LocalTerm::new(sites, table, alphabet_size)
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn diameter(&self) -> i64 {
        *self.sites.last().unwrap()
    }

    pub fn norm(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn scaled(&self, c: f64) -> LocalTerm {
        LocalTerm { sites: self.sites.clone(), table: self.table.iter().map(|v| v * c).collect() }
    }

    #[inline]
    fn value_at(&self, view: &View, anchor: i64, k: usize) -> f64 {
        let idx = self.sites.iter().fold(0usize, |acc, &s| acc * k + view.get(anchor + s) as usize);
        self.table[idx]
    }
}

/// The family `Phi_{{0,n}}(w) = coupling * n^{-alpha} * table[w_0][w_n]` for
/// `start <= n <= end` (`end = None` for an infinite family).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawPair {
    coupling: f64,
    alpha: f64,
    start: u64,
    end: Option<u64>,
    table: Vec<f64>,
}

impl PowerLawPair {
    pub fn new(
        coupling: f64,
        alpha: f64,
        start: u64,
        end: Option<u64>,
        table: Vec<f64>,
        alphabet_size: usize,
    ) -> Result<Self> {
        if start == 0 {
            return Err(Error::InvalidInput("pair family must start at distance >= 1".into()));
        }
        if end.is_some_and(|e| e < start) {
            return Err(Error::InvalidInput("pair family end precedes its start".into()));
        }
        if table.len() != alphabet_size * alphabet_size {
            return Err(Error::InvalidInput(format!(
                "pair table needs {} entries, got {}",
                alphabet_size * alphabet_size,
                table.len()
            )));
        }
        if !coupling.is_finite() || !alpha.is_finite() || table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("pair family has a non-finite parameter".into()));
        }
        let nonzero = coupling != 0.0 && table.iter().any(|&v| v != 0.0);
        if end.is_none() && alpha <= 1.0 && nonzero {
            return Err(Error::NotUac(format!("pair family with exponent {alpha} <= 1 has divergent norm")));
        }
        Ok(PowerLawPair { coupling, alpha, start, end, table })
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn end(&self) -> Option<u64> {
        self.end
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `max |table|`, the sup norm of the pair function before weighting.
    pub fn table_norm(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sum_{n in family} n^{-alpha}`.
    pub fn weight_sum(&self) -> Bounded {
        power_weight(self.alpha, self.start, self.end, 0.0)
    }

    fn scaled(&self, c: f64) -> PowerLawPair {
        PowerLawPair { coupling: self.coupling * c, ..self.clone() }
    }
}

/// `sum_{n=start}^{end} n^{shift - alpha}`; infinite when that diverges.
fn power_weight(alpha: f64, start: u64, end: Option<u64>, shift: f64) -> Bounded {
    let a = alpha - shift;
    match end {
        Some(e) => Bounded::exact((start..=e).map(|n| (n as f64).powf(-a)).sum()),
        None if a > 1.0 => periodic_power_tail(a, start, &[1.0]),
        None => Bounded::exact(f64::INFINITY),
    }
}

/// Local terms and pair families, each standing for all of its translates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Terms {
    pub(crate) locals: Vec<LocalTerm>,
    pub(crate) pairs: Vec<PowerLawPair>,
}

impl Terms {
    pub fn new(locals: Vec<LocalTerm>, pairs: Vec<PowerLawPair>) -> Self {
        Terms { locals, pairs }
    }

    pub fn locals(&self) -> &[LocalTerm] {
        &self.locals
    }

    pub fn pairs(&self) -> &[PowerLawPair] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.locals.is_empty() && self.pairs.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Terms {
        Terms {
            locals: self.locals.iter().map(|t| t.scaled(c)).collect(),
            pairs: self.pairs.iter().map(|p| p.scaled(c)).collect(),
        }
    }

    /// Number of consecutive sites, starting at the anchor, that the anchored
    /// sum reads; `None` when some pair family is infinite.
    pub fn range(&self) -> Option<usize> {
        let mut r = 1usize;
        for t in &self.locals {
            r = r.max(t.diameter() as usize + 1);
        }
        for p in &self.pairs {
            r = r.max(p.end? as usize + 1);
        }
        Some(r)
    }

    /// Sum of all terms whose anchor (smallest site) is `i`.
    pub(crate) fn anchored(&self, view: &View, i: i64, k: usize) -> Bounded {
        let mut local = 0.0;
        for t in &self.locals {
            local += t.value_at(view, i, k);
        }
        let mut out = Bounded::exact(local);
        for p in &self.pairs {
            let x = view.get(i) as usize;
            let row = &p.table[x * k..(x + 1) * k];
            out = out + right_sum(view, i, p.alpha, p.start, p.end, |y| row[y as usize]).scale(p.coupling);
        }
        out
    }

    /// Sum of all translates meeting `[lo, hi]`.
    pub(crate) fn meeting(&self, view: &View, lo: i64, hi: i64, k: usize) -> Bounded {
        let mut local = 0.0;
        for t in &self.locals {
            let d = t.diameter();
            for j in lo - d..=hi {
                if t.sites.iter().any(|&s| lo <= j + s && j + s <= hi) {
                    local += t.value_at(view, j, k);
                }
            }
        }
        let mut out = Bounded::exact(local);
        for p in &self.pairs {
            for j in lo..=hi {
                let x = view.get(j) as usize;
                let row = &p.table[x * k..(x + 1) * k];
                out = out + right_sum(view, j, p.alpha, p.start, p.end, |y| row[y as usize]).scale(p.coupling);
                let from = p.start.max((j - lo + 1) as u64);
                out = out + left_sum(view, j, p.alpha, from, p.end, |w| p.table[w as usize * k + x]).scale(p.coupling);
            }
        }
        out
    }

    /// `sum_{i in [lo,hi]} sum_{V containing i, V not inside [lo,hi]} ||Phi_V||`.
    pub fn crossing_bound(&self, lo: i64, hi: i64) -> f64 {
        let mut b = 0.0;
        for t in &self.locals {
            let d = t.diameter();
            let norm = t.norm();
            for j in lo - d..=hi {
                let inside = t.sites.iter().filter(|&&s| lo <= j + s && j + s <= hi).count();
                if inside > 0 && inside < t.sites.len() {
                    b += inside as f64 * norm;
                }
            }
        }
        for p in &self.pairs {
            let norm = p.coupling.abs() * p.table_norm();
            for i in lo..=hi {
                // an empty finite range sums to zero
                let right = power_weight(p.alpha, p.start.max((hi - i + 1) as u64), p.end, 0.0);
                let left = power_weight(p.alpha, p.start.max((i - lo + 1) as u64), p.end, 0.0);
                b += norm * (right.value + left.value);
            }
        }
        b
    }

    /// Table of the anchored sum over words of length `r`; requires the
    /// terms to read only the first `r` sites.
    pub(crate) fn anchored_table(&self, r: usize, k: usize, cap: u64) -> Result<Vec<f64>> {
        if self.range().is_none_or(|rr| rr > r) {
            return Err(Error::InvalidInput("terms reach beyond the requested range".into()));
        }
        let count = checked_count(k, r, cap)?;
        let base = Config::constant(0);
        let w = Window::new(0, r as i64 - 1)?;
        Ok(crate::par::map_indexed(count, |idx| {
            let p = Pattern::from_index(w, k, idx);
            self.anchored(&View::patched(&base, 0, p.letters()), 0, k).value
        }))
    }
}

/// A translation-invariant interaction `{Phi_V}` on an alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    alphabet: Alphabet,
    terms: Terms,
}

impl Interaction {
    pub fn new(alphabet: Alphabet, terms: Terms) -> Result<Self> {
        let k = alphabet.size();
        for t in &terms.locals {
            if t.table.len() != checked_count(k, t.sites.len(), 1 << 24)? {
                return Err(Error::AlphabetMismatch("local term table size".into()));
            }
        }
        for p in &terms.pairs {
            if p.table.len() != k * k {
                return Err(Error::AlphabetMismatch("pair table size".into()));
            }
        }
        Ok(Interaction { alphabet, terms })
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        Interaction { alphabet, terms: Terms::default() }
    }

    /// Nearest-neighbour Ising: `Phi_{0} = -h w_0`, `Phi_{0,1} = -beta w_0 w_1`.
    pub fn ising(alphabet: Alphabet, beta: f64, h: f64) -> Result<Self> {
        let s = alphabet.spin_values()?;
        let k = alphabet.size();
        let field = LocalTerm::from_fn(vec![0], k, |w| -h * s[w[0] as usize])?;
        let bond = LocalTerm::from_fn(vec![0, 1], k, |w| -beta * s[w[0] as usize] * s[w[1] as usize])?;
        Interaction::new(alphabet, Terms::new(vec![field, bond], vec![]))
    }

    /// `Phi_{0} = -h w_0`, `Phi_{0,n} = -beta w_0 w_n / n^alpha` for all `n >= 1`.
    pub fn dyson(alphabet: Alphabet, h: f64, beta: f64, alpha: f64) -> Result<Self> {
        let s = alphabet.spin_values()?;
        let k = alphabet.size();
        let field = LocalTerm::from_fn(vec![0], k, |w| -h * s[w[0] as usize])?;
        let table = (0..k * k).map(|i| s[i / k] * s[i % k]).collect();
        let pair = PowerLawPair::new(-beta, alpha, 1, None, table, k)?;
        Interaction::new(alphabet, Terms::new(vec![field], vec![pair]))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    /// `H_Lambda(c)`: the sum of `Phi_V(c)` over translates meeting `window`.
    pub fn hamiltonian(&self, window: Window, c: &Config, tol: f64) -> Result<EvalResult> {
        check_tol(tol)?;
        let r = self.terms.meeting(&View::of(c), window.lo(), window.hi(), self.alphabet.size());
        within_tol(r, tol)
    }

    pub(crate) fn hamiltonian_view(&self, view: &View, window: Window) -> Bounded {
        self.terms.meeting(view, window.lo(), window.hi(), self.alphabet.size())
    }

    /// `(sum_{V containing 0} ||Phi_V||, sum_{0 in V, V in Z_+} diam(V) ||Phi_V||)`.
    pub fn uac_norms(&self) -> (f64, f64) {
        let mut uac = 0.0;
        let mut diam = 0.0;
        for t in &self.terms.locals {
            uac += t.sites.len() as f64 * t.norm();
            diam += t.diameter() as f64 * t.norm();
        }
        for p in &self.terms.pairs {
            let norm = p.coupling.abs() * p.table_norm();
            if norm == 0.0 {
                continue;
            }
            uac += 2.0 * norm * power_weight(p.alpha, p.start, p.end, 0.0).value;
            diam += norm * power_weight(p.alpha, p.start, p.end, 1.0).value;
        }
        (uac, diam)
    }
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")))
    }
}

pub(crate) fn within_tol(r: Bounded, tol: f64) -> Result<Bounded> {
    if r.error <= tol {
        Ok(r)
    } else {
        Err(Error::TolUnreachable {
            tol,
            reason: format!("closed-form tail error {:e} exceeds the tolerance", r.error),
        })
    }
}
