//! Potentials on the full shift and their regularity diagnostics.
//!
//! Every potential except an opaque half-line one carries an internal
//! [`Terms`] expansion: `phi(w)` is the sum of the terms anchored at site 0.
//! Evaluation, Birkhoff sums, cocycles, kernels and integrals all go through
//! that expansion, which keeps long-range tails in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interaction::{check_tol, within_tol, EvalResult, Interaction, LocalTerm, PowerLawPair, Terms, View};
use crate::numeric::Bounded;
use crate::shift::{checked_count, Alphabet, Config, Pattern, Symbol, Window, DEFAULT_BUDGET};
use crate::specification::Specification;

/// Default absolute tolerance for evaluations.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum PotentialKind {
    /// `phi(w) = table[w_0 .. w_{range-1}]`, indexed lexicographically.
    FiniteRange { range: usize, table: Vec<f64> },
    /// `h w_0 + sum_{n>=1} beta w_0 w_n / n^alpha` on spins.
    Dyson { h: f64, beta: f64, alpha: f64 },
    /// `-sum_{0 in V in Z_+} Phi_V`.
    FromInteraction(Interaction),
    /// `log gamma_0(w_0 | anchor-filled left) / gamma_0(anchor | same)`.
    HalfLine { spec: Box<Specification>, anchor: Symbol },
}

#[derive(Debug, Clone)]
pub struct Potential {
    alphabet: Alphabet,
    kind: PotentialKind,
    terms: Option<Terms>,
}

/// How a reported regularity number relates to the true supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quality {
    Exact,
    UpperBound,
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub quality: Quality,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Estimate { value, quality: Quality::Exact }
    }

    fn upper(value: f64) -> Self {
        Estimate { value, quality: Quality::UpperBound }
    }
}

/// Entries `var_{[-p, n+p]} S_{n+1} phi` for `p <= p_max`, `n <= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaltersTable {
    /// `entries[p][n]`.
    pub entries: Vec<Vec<Estimate>>,
}

impl WaltersTable {
    /// `sup_n` of each row.
    pub fn sup_over_n(&self) -> Vec<f64> {
        self.entries.iter().map(|row| row.iter().fold(0.0f64, |m, e| m.max(e.value))).collect()
    }

    /// Whether every column is nonincreasing in `p`.
    pub fn nonincreasing_in_p(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b.value <= a.value * (1.0 + 1e-12) + 1e-15))
    }
}

impl Potential {
    pub fn finite_range(alphabet: Alphabet, range: usize, table: Vec<f64>) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidInput("range must be at least 1".into()));
        }
        let sites: Vec<i64> = (0..range as i64).collect();
        let term = LocalTerm::new(sites, table.clone(), alphabet.size())?;
        Ok(Potential {
            alphabet,
            kind: PotentialKind::FiniteRange { range, table },
            terms: Some(Terms::new(vec![term], vec![])),
        })
    }

    /// Finite-range potential from a function of the first `range` letters.
    pub fn from_fn(alphabet: Alphabet, range: usize, f: impl Fn(&[Symbol]) -> f64) -> Result<Self> {
        let count = checked_count(alphabet.size(), range, DEFAULT_BUDGET)?;
        let w = Window::new(0, range as i64 - 1)?;
        let table = (0..count).map(|i| f(Pattern::from_index(w, alphabet.size(), i).letters())).collect();
        Potential::finite_range(alphabet, range, table)
    }

    pub fn zero(alphabet: Alphabet) -> Self {
        Potential::constant(alphabet, 0.0)
    }

    pub fn constant(alphabet: Alphabet, v: f64) -> Self {
        let k = alphabet.size();
        Potential::finite_range(alphabet, 1, vec![v; k]).expect("constant table is valid")
    }

    /// `phi(w) = log p[w_0]`.
    pub fn bernoulli_log(alphabet: Alphabet, p: &[f64]) -> Result<Self> {
        if p.len() != alphabet.size() || p.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidInput("probabilities must be positive, one per symbol".into()));
        }
        Potential::finite_range(alphabet, 1, p.iter().map(|x| x.ln()).collect())
    }

    /// `phi(w) = beta w_0 w_1 + h w_0` on spins.
    pub fn ising(alphabet: Alphabet, beta: f64, h: f64) -> Result<Self> {
        let s = alphabet.spin_values()?;
        Potential::from_fn(alphabet, 2, |w| beta * s[w[0] as usize] * s[w[1] as usize] + h * s[w[0] as usize])
    }

    pub fn dyson(alphabet: Alphabet, h: f64, beta: f64, alpha: f64) -> Result<Self> {
        let s = alphabet.spin_values()?;
        if !(alpha > 1.0) {
            return Err(Error::InvalidInput(format!("Dyson exponent must exceed 1, got {alpha}")));
        }
        let k = alphabet.size();
        let field = LocalTerm::from_fn(vec![0], k, |w| h * s[w[0] as usize])?;
        let table = (0..k * k).map(|i| s[i / k] * s[i % k]).collect();
        let pair = PowerLawPair::new(beta, alpha, 1, None, table, k)?;
        Ok(Potential {
            alphabet,
            kind: PotentialKind::Dyson { h, beta, alpha },
            terms: Some(Terms::new(vec![field], vec![pair])),
        })
    }

    pub(crate) fn half_line(spec: Specification, anchor: Symbol, terms: Option<Terms>) -> Self {
        Potential {
            alphabet: spec.alphabet().clone(),
            kind: PotentialKind::HalfLine { spec: Box::new(spec), anchor },
            terms,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// The anchored-term expansion, when one is known.
    pub fn terms(&self) -> Option<&Terms> {
        self.terms.as_ref()
    }

    /// Number of leading sites `phi` reads, `None` for infinite range or an
    /// opaque half-line potential.
    pub fn range(&self) -> Option<usize> {
        match &self.kind {
            PotentialKind::FiniteRange { range, .. } => Some(*range),
            _ => self.terms.as_ref()?.range(),
        }
    }

    /// Table of `phi` over words of length `range()`.
    pub fn finite_table(&self, cap: u64) -> Result<(usize, Vec<f64>)> {
        if let PotentialKind::FiniteRange { range, table } = &self.kind {
            return Ok((*range, table.clone()));
        }
        let r = self.range().ok_or_else(|| Error::InvalidInput("potential does not have finite range".into()))?;
        let terms = self.terms.as_ref().expect("finite range implies terms");
        Ok((r, terms.anchored_table(r, self.alphabet.size(), cap)?))
    }

    /// `phi(c)` with an error bound no larger than `tol`.
    pub fn eval(&self, c: &Config, tol: f64) -> Result<EvalResult> {
        self.eval_at(c, 0, tol)
    }

    /// `phi(S^i c)`.
    pub fn eval_at(&self, c: &Config, i: i64, tol: f64) -> Result<EvalResult> {
        check_tol(tol)?;
        within_tol(self.eval_view(&View::of(c), i)?, tol)
    }

    pub(crate) fn eval_view(&self, view: &View, i: i64) -> Result<Bounded> {
        match &self.terms {
            Some(t) => Ok(t.anchored(view, i, self.alphabet.size())),
            None => match &self.kind {
                PotentialKind::HalfLine { spec, anchor } => spec.half_line_log_ratio(view, i, *anchor),
                _ => unreachable!("only half-line potentials lack an expansion"),
            },
        }
    }

    /// `phi` on the constant configuration `a`.
    pub fn value_at_constant(&self, a: Symbol, tol: f64) -> Result<EvalResult> {
        self.eval(&Config::constant(a), tol)
    }

    /// `S_n phi(c) = sum_{k<n} phi(S^k c)`.
    pub fn birkhoff_sum(&self, c: &Config, n: usize, tol: f64) -> Result<EvalResult> {
        check_tol(tol)?;
        if n == 0 {
            return Err(Error::InvalidInput("Birkhoff sum needs n >= 1".into()));
        }
        let view = View::of(c);
        let mut acc = Bounded::ZERO;
        for k in 0..n as i64 {
            acc = acc + self.eval_view(&view, k)?;
        }
        within_tol(acc, tol)
    }

    /// `var_n phi`: exact for finite range, an analytic upper bound otherwise.
    pub fn variation_estimate(&self, n: usize, cap: u64) -> Result<Estimate> {
        if self.range().is_some() {
            let (r, table) = self.finite_table(cap)?;
            return Ok(Estimate::exact(table_variation(&table, self.alphabet.size(), r, n)));
        }
        let (local, pairs) = self.split_terms()?;
        let k = self.alphabet.size();
        let mut v = match local {
            Some((r, table)) => table_variation(&table, k, r, n),
            None => 0.0,
        };
        for p in &pairs {
            let osc = if n == 0 { table_spread(p.table()) } else { row_spread(p.table(), k) };
            v += p.coupling().abs() * osc * tail_weight(p, n.max(1) as u64);
        }
        Ok(Estimate::upper(v))
    }

    /// `delta_i phi`: exact for finite range, an analytic upper bound otherwise.
    pub fn oscillation_estimate(&self, i: i64, cap: u64) -> Result<Estimate> {
        if self.range().is_some() {
            let (r, table) = self.finite_table(cap)?;
            return Ok(Estimate::exact(table_oscillation(&table, self.alphabet.size(), r, i)));
        }
        let (local, pairs) = self.split_terms()?;
        let k = self.alphabet.size();
        let mut v = match local {
            Some((r, table)) => table_oscillation(&table, k, r, i),
            None => 0.0,
        };
        for p in &pairs {
            if i == 0 {
                v += p.coupling().abs() * col_spread(p.table(), k) * p.weight_sum().value;
            } else if i >= p.start() as i64 && p.end().is_none_or(|e| i as u64 <= e) {
                v += p.coupling().abs() * row_spread(p.table(), k) * (i as f64).powf(-p.alpha());
            }
        }
        Ok(Estimate::upper(v))
    }

    /// Lower bound on `var_n phi` from random pairs agreeing on `[0, n-1]`.
    pub fn variation_probe(&self, n: usize, probes: usize, radius: i64, seed: u64) -> Result<f64> {
        let k = self.alphabet.size();
        let a = self.alphabet.background();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Window::new(-radius, n as i64 + radius)?;
        let mut best: f64 = 0.0;
        for _ in 0..probes {
            let letters: Vec<Symbol> = (0..w.len()).map(|_| rng.random_range(0..k) as Symbol).collect();
            let other: Vec<Symbol> = w
                .sites()
                .zip(&letters)
                .map(|(i, &s)| if (0..n as i64).contains(&i) { s } else { rng.random_range(0..k) as Symbol })
                .collect();
            let x = Config::from_pattern(a, &Pattern::new(w, letters)?);
            let y = Config::from_pattern(a, &Pattern::new(w, other)?);
            let d = self.eval(&x, 1.0)?.value - self.eval(&y, 1.0)?.value;
            best = best.max(d.abs());
        }
        Ok(best)
    }

    /// `var_{[-p, n+p]} S_{n+1} phi` for `p <= p_max`, `n <= n_max`. Exact by
    /// enumeration for finite range; summed variation bounds otherwise.
    pub fn walters_bowen_diagnostic(&self, p_max: usize, n_max: usize, cap: u64) -> Result<WaltersTable> {
        let k = self.alphabet.size();
        if self.range().is_some() {
            let (r, table) = self.finite_table(cap)?;
            let mut entries = vec![Vec::with_capacity(n_max + 1); p_max + 1];
            for n in 0..=n_max {
                let len = n + r;
                let count = checked_count(k, len, cap)?;
                let sums: Vec<f64> = crate::par::map_indexed(count, |idx| {
                    let w = Pattern::from_index(Window::new(0, len as i64 - 1).unwrap(), k, idx);
                    (0..=n).map(|j| table[crate::shift::word_index(&w.letters()[j..j + r], k)]).sum()
                });
                for (p, row) in entries.iter_mut().enumerate() {
                    let fixed = (n + p + 1).min(len);
                    row.push(Estimate::exact(grouped_spread(&sums, k, len, fixed)));
                }
            }
            return Ok(WaltersTable { entries });
        }
        let vars: Vec<f64> =
            (0..=n_max + p_max + 1).map(|m| self.variation_estimate(m, cap).map(|e| e.value)).collect::<Result<_>>()?;
        let entries = (0..=p_max)
            .map(|p| (0..=n_max).map(|n| Estimate::upper((p + 1..=n + p + 1).map(|m| vars[m]).sum())).collect())
            .collect();
        Ok(WaltersTable { entries })
    }

    /// Lower bound on `var_{[-p, n+p]} S_{n+1} phi` from random pairs that
    /// agree on `[-p, n+p]` and are random on `radius` further sites per side.
    pub fn walters_probe(&self, p: usize, n: usize, probes: usize, radius: i64, seed: u64) -> Result<f64> {
        let k = self.alphabet.size();
        let a = self.alphabet.background();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (-(p as i64), (n + p) as i64);
        let w = Window::new(lo - radius, hi + radius)?;
        let mut best: f64 = 0.0;
        for _ in 0..probes {
            let letters: Vec<Symbol> = (0..w.len()).map(|_| rng.random_range(0..k) as Symbol).collect();
            let other: Vec<Symbol> = w
                .sites()
                .zip(&letters)
                .map(|(i, &s)| if lo <= i && i <= hi { s } else { rng.random_range(0..k) as Symbol })
                .collect();
            let x = Config::from_pattern(a, &Pattern::new(w, letters)?);
            let y = Config::from_pattern(a, &Pattern::new(w, other)?);
            let d = self.birkhoff_sum(&x, n + 1, 1.0)?.value - self.birkhoff_sum(&y, n + 1, 1.0)?.value;
            best = best.max(d.abs());
        }
        Ok(best)
    }

    /// Finite local part (as a table) and the infinite pair families.
    fn split_terms(&self) -> Result<SplitTerms> {
        let terms =
            self.terms.as_ref().ok_or_else(|| Error::InvalidInput("no term expansion for this potential".into()))?;
        let (finite, infinite): (Vec<_>, Vec<_>) = terms.pairs().iter().cloned().partition(|p| p.end().is_some());
        let local = Terms::new(terms.locals().to_vec(), finite);
        let local = if local.is_empty() {
            None
        } else {
            let r = local.range().expect("finite part");
            Some((r, local.anchored_table(r, self.alphabet.size(), DEFAULT_BUDGET)?))
        };
        Ok((local, infinite))
    }
}

/// `(range, table)` of the finite part and the infinite pair families.
type SplitTerms = (Option<(usize, Vec<f64>)>, Vec<PowerLawPair>);

/// `-sum_{0 in V in Z_+} Phi_V`.
pub fn potential_from_interaction(phi: &Interaction) -> Potential {
    Potential {
        alphabet: phi.alphabet().clone(),
        kind: PotentialKind::FromInteraction(phi.clone()),
        terms: Some(phi.terms().scaled(-1.0)),
    }
}

fn tail_weight(p: &PowerLawPair, from: u64) -> f64 {
    let from = from.max(p.start());
    match p.end() {
        Some(e) => (from..=e).map(|n| (n as f64).powf(-p.alpha())).sum(),
        None => crate::numeric::power_tail(p.alpha(), from).value,
    }
}

fn table_spread(t: &[f64]) -> f64 {
    let (lo, hi) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    hi - lo
}

/// `max_x (max_y T[x][y] - min_y T[x][y])`.
fn row_spread(t: &[f64], k: usize) -> f64 {
    (0..k).map(|x| table_spread(&t[x * k..(x + 1) * k])).fold(0.0, f64::max)
}

/// `max_y (max_x T[x][y] - min_x T[x][y])`.
fn col_spread(t: &[f64], k: usize) -> f64 {
    (0..k).map(|y| table_spread(&(0..k).map(|x| t[x * k + y]).collect::<Vec<_>>())).fold(0.0, f64::max)
}

/// Largest spread of `values` (indexed by words of length `len`) among
/// words sharing their first `fixed` letters.
fn grouped_spread(values: &[f64], k: usize, len: usize, fixed: usize) -> f64 {
    let block = k.pow((len - fixed) as u32);
    values.chunks(block).map(table_spread).fold(0.0, f64::max)
}

fn table_variation(table: &[f64], k: usize, r: usize, n: usize) -> f64 {
    if n >= r {
        return 0.0;
    }
    grouped_spread(table, k, r, n)
}

fn table_oscillation(table: &[f64], k: usize, r: usize, i: i64) -> f64 {
    if i < 0 || i >= r as i64 {
        return 0.0;
    }
    let stride = k.pow((r - 1 - i as usize) as u32);
    let mut best: f64 = 0.0;
    for idx in 0..table.len() {
        if !(idx / stride).is_multiple_of(k) {
            continue;
        }
        let vals: Vec<f64> = (0..k).map(|x| table[idx + x * stride]).collect();
        best = best.max(table_spread(&vals));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{hurwitz_zeta, zeta};

    fn spins() -> Alphabet {
        Alphabet::spins()
    }

    #[test]
    fn constant_and_flat_evaluations() {
        let z = Potential::zero(spins());
        let c = Config::constant(0).with(3, 1);
        assert_eq!(z.eval(&c, 1e-10).unwrap(), Bounded::exact(0.0));
        let v = Potential::constant(spins(), 0.25);
        assert_eq!(v.birkhoff_sum(&c, 7, 1e-10).unwrap().value, 1.75);
    }

    #[test]
    fn ising_birkhoff_all_plus() {
        let phi = Potential::ising(spins(), 0.5, 0.1).unwrap();
        let c = Config::constant(1);
        let s = phi.birkhoff_sum(&c, 5, 1e-12).unwrap();
        assert!((s.value - 3.0).abs() < 1e-14);
        let naive: f64 = (0..5).map(|k| phi.eval(&c.shift(k), 1.0).unwrap().value).sum();
        assert!((s.value - naive).abs() < 1e-14);
        assert_eq!(phi.birkhoff_sum(&c, 1, 1.0).unwrap(), phi.eval(&c, 1.0).unwrap());
    }

    #[test]
    fn dyson_on_all_plus_and_flip_symmetry() {
        let d = Potential::dyson(spins(), 0.0, 1.0, 2.0).unwrap();
        let v = d.eval(&Config::constant(1), 1e-8).unwrap();
        assert!((v.value - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-8);
        // brute partial sums plus the integral-test tail bound
        let n = 100_000u64;
        let partial: f64 = (1..=n).map(|k| 1.0 / (k * k) as f64).sum();
        assert!((v.value - partial).abs() <= 1.0 / n as f64);
        let h = Potential::dyson(spins(), 0.3, 0.7, 2.5).unwrap();
        let c = Config::constant(1).with(0, 0).with(2, 0).with(-1, 0);
        // phi is odd in w_0; a flip of every site only negates the field term
        let a = h.eval(&c, 1e-10).unwrap().value;
        let b = h.eval(&c.with(0, 1), 1e-10).unwrap().value;
        assert!((a + b).abs() < 1e-13);
        let global = Config::constant(0).with(0, 1).with(2, 1).with(-1, 1);
        let g = h.eval(&global, 1e-10).unwrap().value;
        assert!((a - g + 2.0 * 0.3).abs() < 1e-13);
    }

    #[test]
    fn dyson_requires_spins() {
        let e = Potential::dyson(Alphabet::numbered(2).unwrap(), 0.0, 1.0, 2.0).unwrap_err();
        assert_eq!(e.kind(), "alphabet_mismatch");
        assert_eq!(Potential::zero(spins()).eval(&Config::constant(0), 0.0).unwrap_err().kind(), "invalid_input");
    }

    #[test]
    fn variation_examples() {
        let ising = Potential::ising(spins(), 0.5, 0.0).unwrap();
        assert_eq!(ising.variation_estimate(2, DEFAULT_BUDGET).unwrap().value, 0.0);
        // exhaustive table scan: fixing w_0 and varying w_1 moves phi by 2 beta = 1
        let v1 = ising.variation_estimate(1, DEFAULT_BUDGET).unwrap();
        assert_eq!(v1, Estimate::exact(1.0));
        assert_eq!(ising.variation_estimate(0, DEFAULT_BUDGET).unwrap().value, 1.0);
        let d = Potential::dyson(spins(), 0.0, 1.0, 3.0).unwrap();
        let v = d.variation_estimate(10, DEFAULT_BUDGET).unwrap();
        assert_eq!(v.quality, Quality::UpperBound);
        assert!((v.value - 0.011049834970802067).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for n in 0..30 {
            let x = d.variation_estimate(n, DEFAULT_BUDGET).unwrap().value;
            assert!(x <= last);
            last = x;
        }
        let probe = d.variation_probe(3, 2000, 12, 7).unwrap();
        assert!(probe <= d.variation_estimate(3, DEFAULT_BUDGET).unwrap().value);
        assert!(probe > 0.0);
    }

    #[test]
    fn oscillation_examples() {
        let ising = Potential::ising(spins(), 0.5, 0.2).unwrap();
        assert_eq!(ising.oscillation_estimate(5, DEFAULT_BUDGET).unwrap().value, 0.0);
        let field = Potential::from_fn(spins(), 1, |w| if w[0] == 1 { 0.3 } else { -0.3 }).unwrap();
        let d0 = field.oscillation_estimate(0, DEFAULT_BUDGET).unwrap().value;
        assert!(d0 <= field.variation_estimate(0, DEFAULT_BUDGET).unwrap().value);
        let d = Potential::dyson(spins(), 0.4, 1.0, 2.0).unwrap();
        let b4 = d.oscillation_estimate(4, DEFAULT_BUDGET).unwrap().value;
        assert!((b4 - 0.125).abs() < 1e-15);
        // an explicit pair differing only at site 4 realises the bound
        let x = Config::constant(1);
        let y = x.with(4, 0);
        let diff = d.eval(&x, 1e-12).unwrap().value - d.eval(&y, 1e-12).unwrap().value;
        assert!((diff - 0.125).abs() < 1e-12);
        let b0 = d.oscillation_estimate(0, DEFAULT_BUDGET).unwrap().value;
        assert!((b0 - 2.0 * (0.4 + zeta(2.0).value)).abs() < 1e-13);
    }

    #[test]
    fn walters_vanishes_for_finite_range() {
        let ising = Potential::ising(spins(), 0.8, -0.3).unwrap();
        let t = ising.walters_bowen_diagnostic(3, 6, DEFAULT_BUDGET).unwrap();
        assert!(t.entries[0].iter().all(|e| (e.value - 1.6).abs() < 1e-12));
        for row in &t.entries[1..] {
            assert!(row.iter().all(|e| e.value == 0.0 && e.quality == Quality::Exact));
        }
        let flat = Potential::zero(spins()).walters_bowen_diagnostic(2, 4, DEFAULT_BUDGET).unwrap();
        assert!(flat.sup_over_n().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn walters_dyson_decreases_in_p_and_dominates_probes() {
        let d = Potential::dyson(spins(), 0.0, 1.0, 3.0).unwrap();
        let t = d.walters_bowen_diagnostic(4, 4, DEFAULT_BUDGET).unwrap();
        assert!(t.nonincreasing_in_p());
        assert!(t.entries[4][2].value < t.entries[0][2].value);
        for p in 0..3 {
            let probe = d.walters_probe(p, 2, 1024, 10, 11 + p as u64).unwrap();
            assert!(probe <= t.entries[p][2].value + 1e-12);
        }
        // closed form of the bound at p = 0, n = 0: var_1 = 2 zeta(3)
        assert!((t.entries[0][0].value - 2.0 * hurwitz_zeta(3.0, 1.0).value).abs() < 1e-14);
    }

    #[test]
    fn interaction_sign_bookkeeping() {
        let inter = Interaction::ising(spins(), 0.5, 0.1).unwrap();
        let phi = potential_from_interaction(&inter);
        let direct = Potential::ising(spins(), 0.5, 0.1).unwrap();
        let c = Config::constant(1).with(0, 0).with(3, 0);
        for i in -2..5 {
            let a = phi.eval_at(&c, i, 1e-12).unwrap().value;
            let b = direct.eval_at(&c, i, 1e-12).unwrap().value;
            assert!((a - b).abs() < 1e-15);
        }
        let empty = potential_from_interaction(&Interaction::empty(spins()));
        assert_eq!(empty.eval(&c, 1e-12).unwrap().value, 0.0);
        let dy = potential_from_interaction(&Interaction::dyson(spins(), 0.2, 0.6, 2.5).unwrap());
        let d = Potential::dyson(spins(), 0.2, 0.6, 2.5).unwrap();
        let a = dy.eval(&c, 1e-12).unwrap().value;
        let b = d.eval(&c, 1e-12).unwrap().value;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn finite_table_roundtrip() {
        let inter = Interaction::ising(spins(), 0.5, 0.1).unwrap();
        let phi = potential_from_interaction(&inter);
        let (r, t) = phi.finite_table(DEFAULT_BUDGET).unwrap();
        let (r2, t2) = Potential::ising(spins(), 0.5, 0.1).unwrap().finite_table(DEFAULT_BUDGET).unwrap();
        assert_eq!(r, r2);
        for (a, b) in t.iter().zip(&t2) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(Potential::dyson(spins(), 0.0, 1.0, 2.0).unwrap().finite_table(DEFAULT_BUDGET).is_err());
    }
}
