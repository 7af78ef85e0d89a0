//! Transfer matrices for finite-range potentials, stationary Markov measures,
//! exact integrals against them, and DLR residuals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::check_tol;
use crate::numeric::{hurwitz_zeta, Bounded};
use crate::potential::Potential;
use crate::shift::{checked_count, word_index, Config, Pattern, Window, DEFAULT_BUDGET};
use crate::specification::Specification;

/// Relative tolerance of the power iteration.
pub const POWER_TOL: f64 = 1e-13;
/// Iteration cap of the power iteration.
pub const POWER_CAP: usize = 100_000;

/// Transfer matrix over words of length `max(r-1, 1)`. Row `u` has one
/// entry per next letter `b`, leading to `(u*k + b) mod states`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferData {
    pub alphabet_size: usize,
    pub range: usize,
    pub word_len: usize,
    /// `exp(phi(word) - shift)` indexed by `u * k + b`.
    pub weights: Vec<f64>,
    /// Subtracted from every `phi` value before exponentiating.
    pub shift: f64,
    /// Perron value of the unshifted matrix.
    pub perron_value: f64,
    /// Right vector, max entry 1.
    pub right: Vec<f64>,
    /// Left vector, scaled so that `left . right = 1`.
    pub left: Vec<f64>,
    pub iterations: usize,
}

impl TransferData {
    pub fn states(&self) -> usize {
        self.alphabet_size.pow(self.word_len as u32)
    }

    #[inline]
    fn succ(&self, u: usize, b: usize) -> usize {
        (u * self.alphabet_size + b) % self.states()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let k = self.alphabet_size;
        (0..self.states()).map(|u| (0..k).map(|b| self.weights[u * k + b] * x[self.succ(u, b)]).sum()).collect()
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let k = self.alphabet_size;
        let mut out = vec![0.0; self.states()];
        for u in 0..self.states() {
            for b in 0..k {
                out[self.succ(u, b)] += y[u] * self.weights[u * k + b];
            }
        }
        out
    }

    /// `max_u |(M r)(u) - lambda r(u)|`, relative to `lambda`.
    pub fn perron_residual(&self) -> f64 {
        let lam = self.perron_value / self.shift.exp();
        let mr = self.apply(&self.right);
        mr.iter().zip(&self.right).map(|(a, r)| (a - lam * r).abs()).fold(0.0, f64::max) / lam
    }
}

/// Power iteration from the all-ones vector; returns the vector with max
/// entry 1, the eigenvalue and the iteration count.
fn power_iterate(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> Result<(Vec<f64>, f64, usize)> {
    let mut x = vec![1.0; n];
    let mut lam = 0.0;
    for it in 1..=POWER_CAP {
        let mut y = apply(&x);
        let m = y.iter().copied().fold(0.0, f64::max);
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::NoConvergence { iterations: it });
        }
        y.iter_mut().for_each(|v| *v /= m);
        let diff = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dl = (m - lam).abs() / m;
        x = y;
        lam = m;
        if it > 2 && diff <= POWER_TOL && dl <= POWER_TOL {
            return Ok((x, lam, it));
        }
    }
    Err(Error::NoConvergence { iterations: POWER_CAP })
}

pub fn build_transfer(phi: &Potential) -> Result<TransferData> {
    build_transfer_with_budget(phi, DEFAULT_BUDGET)
}

pub fn build_transfer_with_budget(phi: &Potential, cap: u64) -> Result<TransferData> {
    let (r, table) = phi.finite_table(cap)?;
    let k = phi.alphabet().size();
    let word_len = (r.max(2)) - 1;
    let states = checked_count(k, word_len, cap)?;
    checked_count(k, word_len + 1, cap)?;
    let shift = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = (0..states * k)
        .map(|i| {
            // r = 1 reads only the current letter
            let word = if r == 1 { i / k } else { i };
            (table[word] - shift).exp()
        })
        .collect();
    let mut t = TransferData {
        alphabet_size: k,
        range: r,
        word_len,
        weights,
        shift,
        perron_value: 0.0,
        right: vec![],
        left: vec![],
        iterations: 0,
    };
    let (right, _, it_r) = power_iterate(states, |x| t.apply(x))?;
    let (mut left, _, it_l) = power_iterate(states, |y| t.apply_transpose(y))?;
    let mr = t.apply(&right);
    let num: f64 = left.iter().zip(&mr).map(|(a, b)| a * b).sum();
    let den: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    left.iter_mut().for_each(|v| *v /= den);
    t.perron_value = (num / den) * shift.exp();
    t.right = right;
    t.left = left;
    t.iterations = it_r.max(it_l);
    Ok(t)
}

/// Topological pressure `log lambda`.
pub fn pressure(phi: &Potential) -> Result<f64> {
    let t = build_transfer(phi)?;
    Ok((t.perron_value / t.shift.exp()).ln() + t.shift)
}

/// Stationary Markov measure on words of length `word_len`; `transitions[u][b]`
/// is the probability that the next letter is `b` given the last word `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarkovWire", into = "MarkovWire")]
pub struct MarkovMeasure {
    alphabet_size: usize,
    word_len: usize,
    pi: Vec<f64>,
    transitions: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MarkovWire {
    alphabet_size: usize,
    word_len: usize,
    /// Letters of each state word, for readability; ignored on input.
    #[serde(default)]
    states: Vec<Vec<usize>>,
    pi: Vec<f64>,
    #[serde(rename = "P")]
    transitions: Vec<Vec<f64>>,
}

impl TryFrom<MarkovWire> for MarkovMeasure {
    type Error = Error;
    fn try_from(w: MarkovWire) -> Result<Self> {
        MarkovMeasure::new(w.alphabet_size, w.word_len, w.pi, w.transitions)
    }
}

impl From<MarkovMeasure> for MarkovWire {
    fn from(m: MarkovMeasure) -> Self {
        let w = Window::new(0, m.word_len as i64 - 1).unwrap();
        let states = (0..m.states())
            .map(|u| Pattern::from_index(w, m.alphabet_size, u).letters().iter().map(|&s| s as usize).collect())
            .collect();
        MarkovWire {
            alphabet_size: m.alphabet_size,
            word_len: m.word_len,
            states,
            pi: m.pi,
            transitions: m.transitions,
        }
    }
}

impl MarkovMeasure {
    pub fn new(alphabet_size: usize, word_len: usize, pi: Vec<f64>, transitions: Vec<Vec<f64>>) -> Result<Self> {
        if alphabet_size < 2 || word_len == 0 {
            return Err(Error::InvalidInput("Markov measure needs |E| >= 2 and word length >= 1".into()));
        }
        let states = checked_count(alphabet_size, word_len, DEFAULT_BUDGET)?;
        if pi.len() != states || transitions.len() != states {
            return Err(Error::InvalidInput(format!("expected {states} states")));
        }
        let bad = |v: &f64| !(*v >= 0.0) || !v.is_finite();
        if pi.iter().any(bad) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("pi must be a probability vector".into()));
        }
        for row in &transitions {
            if row.len() != alphabet_size || row.iter().any(bad) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput("every transition row must be a probability vector".into()));
            }
        }
        let m = MarkovMeasure { alphabet_size, word_len, pi, transitions };
        let next = m.step(&m.pi);
        let drift = next.iter().zip(&m.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if drift > 1e-9 {
            return Err(Error::InvalidInput(format!("pi is not stationary (drift {drift:e})")));
        }
        Ok(m)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        MarkovMeasure::bernoulli(&vec![1.0 / k as f64; k])
    }

    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        MarkovMeasure::new(p.len(), 1, p.to_vec(), vec![p.to_vec(); p.len()])
    }

    /// First-order chain on letters with its stationary distribution.
    pub fn from_letter_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        let pi = stationary(&rows)?;
        MarkovMeasure::new(k, 1, pi, rows)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    pub fn states(&self) -> usize {
        self.pi.len()
    }

    #[inline]
    fn succ(&self, u: usize, b: usize) -> usize {
        (u * self.alphabet_size + b) % self.states()
    }

    fn first_letter(&self, u: usize) -> usize {
        u / self.alphabet_size.pow(self.word_len as u32 - 1)
    }

    /// One step of the state chain applied to a row vector.
    fn step(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.states()];
        for (u, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (b, &p) in self.transitions[u].iter().enumerate() {
                out[self.succ(u, b)] += x * p;
            }
        }
        out
    }

    /// Single-letter marginal.
    pub fn letter_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.alphabet_size];
        for (u, &p) in self.pi.iter().enumerate() {
            m[self.first_letter(u)] += p;
        }
        m
    }

    /// Probabilities of all words of length `n`, lexicographic.
    pub fn cylinder_probs(&self, n: usize, cap: u64) -> Result<Vec<f64>> {
        let k = self.alphabet_size;
        checked_count(k, n.max(self.word_len), cap)?;
        if n <= self.word_len {
            let block = k.pow((self.word_len - n) as u32);
            return Ok(self.pi.chunks(block).map(|c| c.iter().sum()).collect());
        }
        let mut probs = self.pi.clone();
        let states = self.states();
        for _ in self.word_len..n {
            let mut next = Vec::with_capacity(probs.len() * k);
            for (idx, &p) in probs.iter().enumerate() {
                let row = &self.transitions[idx % states];
                next.extend(row.iter().map(|&q| p * q));
            }
            probs = next;
        }
        Ok(probs)
    }
}

/// Stationary distribution of a row-stochastic matrix by Gaussian elimination.
#[allow(clippy::needless_range_loop)]
fn stationary(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidInput("transition matrix must be square".into()));
    }
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| rows[j][i] - if i == j { 1.0 } else { 0.0 }).collect();
            row.push(0.0);
            row
        })
        .collect();
    a[k - 1] = vec![1.0; k + 1];
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::InvalidInput("transition matrix has no unique stationary law".into()));
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Ok((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// Equilibrium state of a finite-range potential as a Markov measure.
pub fn equilibrium_markov(phi: &Potential) -> Result<MarkovMeasure> {
    let t = build_transfer(phi)?;
    let k = t.alphabet_size;
    let lam = t.perron_value / t.shift.exp();
    let transitions = (0..t.states())
        .map(|u| {
            let mut row: Vec<f64> =
                (0..k).map(|b| t.weights[u * k + b] * t.right[t.succ(u, b)] / (lam * t.right[u])).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect();
    let mut pi: Vec<f64> = t.left.iter().zip(&t.right).map(|(l, r)| l * r).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    MarkovMeasure::new(k, t.word_len, pi, transitions)
}

/// Entropy `-sum_u pi(u) sum_b P(u,b) log P(u,b)`.
pub fn entropy(mu: &MarkovMeasure) -> f64 {
    let mut h = 0.0;
    for (u, &p) in mu.pi.iter().enumerate() {
        for &q in &mu.transitions[u] {
            if q > 0.0 {
                h -= p * q * q.ln();
            }
        }
    }
    h
}

pub fn cylinder_prob(mu: &MarkovMeasure, p: &Pattern) -> Result<f64> {
    let letters = p.letters();
    if letters.len() < mu.word_len {
        return Err(Error::PatternTooShort { len: letters.len(), word_len: mu.word_len });
    }
    let k = mu.alphabet_size;
    let mut state = word_index(&letters[..mu.word_len], k);
    let mut prob = mu.pi[state];
    for &b in &letters[mu.word_len..] {
        prob *= mu.transitions[state][b as usize];
        state = mu.succ(state, b as usize);
    }
    Ok(prob)
}

/// Largest separation reached when integrating infinite pair families.
const INTEGRATION_CAP: u64 = 1_000_000;

/// `int phi dmu` with an error bound at most `tol`. Finite parts are exact;
/// infinite pair families are summed to a separation `N` and closed with the
/// product-of-marginals tail, whose error is controlled by the distance of
/// the joint law at separation `N` from independence.
pub fn integrate(mu: &MarkovMeasure, phi: &Potential, tol: f64) -> Result<Bounded> {
    check_tol(tol)?;
    let k = phi.alphabet().size();
    if k != mu.alphabet_size {
        return Err(Error::AlphabetMismatch("measure and potential alphabets differ".into()));
    }
    let terms = phi.terms().ok_or_else(|| Error::InvalidInput("potential has no expansion to integrate".into()))?;
    let mut total = Bounded::ZERO;
    for t in terms.locals() {
        let len = (t.diameter() as usize + 1).max(mu.word_len);
        let probs = mu.cylinder_probs(len, DEFAULT_BUDGET)?;
        let w = Window::new(0, len as i64 - 1)?;
        let mut s = 0.0;
        for (idx, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let word = Pattern::from_index(w, k, idx);
            let letters: Vec<_> = t.sites().iter().map(|&q| word.letters()[q as usize]).collect();
            s += p * t.table()[word_index(&letters, k)];
        }
        total = total + Bounded::exact(s);
    }
    let families = terms.pairs().len().max(1) as f64;
    for p in terms.pairs() {
        total = total + integrate_pair(mu, p, tol / families)?;
    }
    Ok(total)
}

fn integrate_pair(mu: &MarkovMeasure, p: &crate::interaction::PowerLawPair, tol: f64) -> Result<Bounded> {
    let k = mu.alphabet_size;
    let states = mu.states();
    let t = p.table();
    let marg = mu.letter_marginal();
    // v[x][u] = P(w_0 = x, state_n = u)
    let mut v: Vec<Vec<f64>> =
        (0..k).map(|x| (0..states).map(|u| if mu.first_letter(u) == x { mu.pi[u] } else { 0.0 }).collect()).collect();
    let t_norm = p.table_norm();
    let product_mean: f64 = (0..k).map(|x| (0..k).map(|y| marg[x] * marg[y] * t[x * k + y]).sum::<f64>()).sum();
    let mut sum = 0.0;
    let mut n = 0u64;
    loop {
        n += 1;
        v = v.iter().map(|row| mu.step(row)).collect();
        if n >= p.start() {
            let e: f64 =
                (0..k).map(|x| (0..states).map(|u| v[x][u] * t[x * k + mu.first_letter(u)]).sum::<f64>()).sum();
            sum += p.coupling() * (n as f64).powf(-p.alpha()) * e;
        }
        if let Some(end) = p.end() {
            if n >= end {
                return Ok(Bounded::exact(sum));
            }
            continue;
        }
        if n < p.start() {
            continue;
        }
        let dist: f64 = (0..k).map(|x| (0..states).map(|u| (v[x][u] - marg[x] * mu.pi[u]).abs()).sum::<f64>()).sum();
        let tail = hurwitz_zeta(p.alpha(), (n + 1) as f64);
        let err = p.coupling().abs() * t_norm * dist * tail.value + p.coupling().abs() * t_norm * tail.error;
        if err <= tol || (n > 64 && err <= tol * 1e3 && dist == 0.0) {
            let value = sum + p.coupling() * product_mean * tail.value;
            return Ok(Bounded { value, error: err });
        }
        if n >= INTEGRATION_CAP {
            return Err(Error::TolUnreachable {
                tol,
                reason: format!("pair-family integral error {err:e} at separation {n}"),
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlrReport {
    /// Max over cylinders on the padded window at the requested pad.
    pub residual: f64,
    /// Same at pad + 2.
    pub residual_wider: f64,
    /// `|residual_wider - residual|`.
    pub sensitivity: f64,
}

/// `max_f |int gamma_L(f|w) dmu(w) - int f dmu|` over indicators of
/// cylinders on subsets of `L` padded by `pad` sites per side. Sites beyond
/// the padded window are filled with the distinguished letter when the
/// kernel is evaluated.
pub fn dlr_residual(mu: &MarkovMeasure, spec: &Specification, lambda: Window, pad: u64) -> Result<DlrReport> {
    let residual = dlr_max(mu, spec, lambda, pad)?;
    let residual_wider = dlr_max(mu, spec, lambda, pad + 2)?;
    Ok(DlrReport { residual, residual_wider, sensitivity: (residual_wider - residual).abs() })
}

fn dlr_max(mu: &MarkovMeasure, spec: &Specification, lambda: Window, pad: u64) -> Result<f64> {
    let k = spec.alphabet().size();
    if k != mu.alphabet_size {
        return Err(Error::AlphabetMismatch("measure and specification alphabets differ".into()));
    }
    let w = lambda.padded(pad);
    let len = w.len();
    let cap = spec.budget();
    checked_count(k + 1, len, cap)?;
    let mu_w = mu.cylinder_probs(len, cap)?;
    let lam_len = lambda.len();
    let left = (lambda.lo() - w.lo()) as usize;
    let right = len - left - lam_len;
    let outer_count = k.pow((left + right) as u32);
    let inner_count = k.pow(lam_len as u32);
    let a = spec.alphabet().background();
    let wl = w;
    // D(w) for every full pattern on W
    let blocks: Vec<Vec<(usize, f64)>> = crate::par::try_map_indexed(outer_count, |o| {
        let lpart = o / k.pow(right as u32);
        let rpart = o % k.pow(right as u32);
        let full_index = |x: usize| (lpart * inner_count + x) * k.pow(right as u32) + rpart;
        let p0 = Pattern::from_index(wl, k, full_index(0));
        let boundary = Config::constant(a).with_pattern(&p0);
        let table = spec.kernel_table(lambda, &boundary)?;
        let mu_out: f64 = (0..inner_count).map(|x| mu_w[full_index(x)]).sum();
        Ok::<_, Error>(
            (0..inner_count)
                .map(|x| {
                    let i = full_index(x);
                    (i, mu_out * table.log_probs[x].exp() - mu_w[i])
                })
                .collect(),
        )
    })?;
    // base-(k+1) table where digit k means "unconstrained"
    let kk = k + 1;
    let total = kk.pow(len as u32);
    let mut b = vec![0.0; total];
    for (i, d) in blocks.into_iter().flatten() {
        let mut rest = i;
        let mut j = 0usize;
        let mut mult = 1usize;
        for _ in 0..len {
            j += (rest % k) * mult;
            rest /= k;
            mult *= kk;
        }
        b[j] = d;
    }
    let mut stride = 1usize;
    for _ in 0..len {
        for idx in 0..total {
            if (idx / stride) % kk == k {
                let base = idx - k * stride;
                b[idx] = (0..k).map(|x| b[base + x * stride]).sum();
            }
        }
        stride *= kk;
    }
    Ok(b.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Exact marginal on `sub` of the finite-volume Gibbs distribution on
/// `volume` with boundary `boundary`, for a finite-range specification.
/// Returned in lexicographic order of patterns on `sub`.
pub fn finite_volume_marginal(
    spec: &Specification,
    volume: Window,
    boundary: &Config,
    sub: Window,
) -> Result<Vec<f64>> {
    if !volume.contains_window(&sub) {
        return Err(Error::InvalidInput(format!("{sub} is not inside {volume}")));
    }
    let phi = spec.potential()?;
    let (r, table) = phi.finite_table(spec.budget())?;
    let k = phi.alphabet().size();
    let sub_count = checked_count(k, sub.len(), spec.budget())?;
    let states = k.pow((r - 1) as u32);
    let start = volume.lo() - (r as i64 - 1);
    let stop = volume.hi() + (r as i64 - 1);
    let log_z: Vec<f64> = crate::par::map_indexed(sub_count, |si| {
        let clamp = Pattern::from_index(sub, k, si);
        let letter_options = |j: i64| -> Vec<usize> {
            if let Some(s) = clamp.get(j) {
                vec![s as usize]
            } else if volume.contains(j) {
                (0..k).collect()
            } else {
                vec![boundary.get(j) as usize]
            }
        };
        // initial state: the r-1 boundary letters left of the volume
        let init = (start..volume.lo()).fold(0usize, |acc, j| acc * k + boundary.get(j) as usize);
        let mut vec_w = vec![0.0; states];
        vec_w[init % states.max(1)] = 1.0;
        let mut log_scale = 0.0;
        for j in volume.lo()..=stop {
            let mut next = vec![0.0; states];
            for (u, &wu) in vec_w.iter().enumerate() {
                if wu == 0.0 {
                    continue;
                }
                for b in letter_options(j) {
                    let word = u * k + b;
                    let v = word % states;
                    // the window ending at j is anchored at j - r + 1
                    let anchor = j - (r as i64 - 1);
                    let f = if anchor <= volume.hi() { table[word].exp() } else { 1.0 };
                    next[v] += wu * f;
                }
            }
            let m = next.iter().copied().fold(0.0, f64::max);
            next.iter_mut().for_each(|x| *x /= m);
            log_scale += m.ln();
            vec_w = next;
        }
        log_scale + vec_w.iter().sum::<f64>().ln()
    });
    let z = crate::numeric::log_sum_exp(&log_z);
    Ok(log_z.iter().map(|l| (l - z).exp()).collect())
}
