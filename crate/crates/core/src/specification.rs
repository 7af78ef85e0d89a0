//! Finite-volume kernels `gamma_Lambda(. | w)` and the objects derived from
//! them: the half-line potential `phi_gamma`, consistency residuals and the
//! specification pressure.
//!
//! Kernels are always produced as a whole table over `E^Lambda` in log
//! domain, normalised with a single log-sum-exp.

use std::fmt;
use std::sync::Arc;

use crate::cocycle;
use crate::error::{Error, Result};
use crate::interaction::{check_tol, Interaction, LocalTerm, PowerLawPair, Terms, View};
use crate::numeric::{log_sum_exp, Bounded};
use crate::potential::{potential_from_interaction, Potential};
use crate::shift::{checked_count, word_index, Alphabet, Config, Pattern, Symbol, Window, DEFAULT_BUDGET};

/// Kernel log-probabilities below this are reported as null.
pub const LOG_FLOOR: f64 = -700.0;

/// Default tolerance for cocycle limits inside kernels.
const KERNEL_TOL: f64 = 1e-12;

/// A single-site kernel `gamma_{0}(x | w)`, extended to every site by
/// translation.
pub trait SiteKernel: fmt::Debug + Send + Sync {
    fn alphabet_size(&self) -> usize;

    /// `log gamma_{0}(x | w)`; the letter of `w` at site 0 is ignored.
    fn log_prob(&self, x: Symbol, w: &Config) -> Result<f64>;

    /// Sites, relative to 0, the kernel may read; `None` if unbounded.
    fn span(&self) -> Option<(i64, i64)>;
}

/// Product kernel with fixed single-site probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Independent {
    log_probs: Vec<f64>,
}

impl Independent {
    pub fn new(probs: &[f64]) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.len() < 2 || probs.iter().any(|&p| !(p > 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("independent kernel needs positive probabilities summing to 1".into()));
        }
        Ok(Independent { log_probs: probs.iter().map(|p| (p / total).ln()).collect() })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }
}

impl SiteKernel for Independent {
    fn alphabet_size(&self) -> usize {
        self.log_probs.len()
    }

    fn log_prob(&self, x: Symbol, _w: &Config) -> Result<f64> {
        Ok(self.log_probs[x as usize])
    }

    fn span(&self) -> Option<(i64, i64)> {
        Some((0, 0))
    }
}

#[derive(Debug, Clone)]
pub enum Source {
    /// Boltzmann kernels `exp(-H_Lambda) / Z_Lambda`.
    Interaction(Interaction),
    /// Kernels proportional to `exp(rho(xi w, ref))`.
    Cocycle(Potential),
    /// A single-site kernel extended to finite volumes by telescoping.
    SingleSite(Arc<dyn SiteKernel>),
}

#[derive(Debug, Clone)]
pub struct Specification {
    alphabet: Alphabet,
    source: Source,
    cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub prob: f64,
    pub log_prob: f64,
    pub error: f64,
}

/// `log gamma_Lambda(p | w)` for every pattern `p` on the window, in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub window: Window,
    pub log_probs: Vec<f64>,
    /// Bound on the absolute error of each log-probability.
    pub error: f64,
}

impl KernelTable {
    pub fn value(&self, p: &Pattern, k: usize) -> KernelValue {
        let lp = self.log_probs[p.index(k)];
        KernelValue { prob: lp.exp(), log_prob: lp, error: self.error }
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }
}

impl Specification {
    pub fn from_interaction(phi: Interaction) -> Self {
        Specification { alphabet: phi.alphabet().clone(), source: Source::Interaction(phi), cap: DEFAULT_BUDGET }
    }

    pub fn from_cocycle(phi: Potential) -> Self {
        Specification { alphabet: phi.alphabet().clone(), source: Source::Cocycle(phi), cap: DEFAULT_BUDGET }
    }

    pub fn single_site(alphabet: Alphabet, kernel: Arc<dyn SiteKernel>) -> Result<Self> {
        if kernel.alphabet_size() != alphabet.size() {
            return Err(Error::AlphabetMismatch(format!(
                "kernel has {} symbols, alphabet has {}",
                kernel.alphabet_size(),
                alphabet.size()
            )));
        }
        Ok(Specification { alphabet, source: Source::SingleSite(kernel), cap: DEFAULT_BUDGET })
    }

    pub fn independent(alphabet: Alphabet, probs: &[f64]) -> Result<Self> {
        let k = Independent::new(probs)?;
        Specification::single_site(alphabet, Arc::new(k))
    }

    pub fn with_budget(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    /// Same kernels, with a different distinguished letter.
    pub fn with_background(mut self, a: Symbol) -> Result<Self> {
        self.alphabet = self.alphabet.with_background(a)?;
        Ok(self)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn budget(&self) -> u64 {
        self.cap
    }

    /// A potential whose cocycle kernels are these kernels.
    pub fn potential(&self) -> Result<Potential> {
        match &self.source {
            Source::Interaction(phi) => Ok(potential_from_interaction(phi)),
            Source::Cocycle(phi) => Ok(phi.clone()),
            Source::SingleSite(_) => phi_from_spec(self),
        }
    }

    /// Sites, relative to 0, that `gamma_{0}` reads; `None` if unbounded.
    pub fn neighborhood(&self) -> Option<(i64, i64)> {
        let terms_span = |t: &Terms| t.range().map(|r| (-(r as i64 - 1), r as i64 - 1));
        match &self.source {
            Source::Interaction(phi) => terms_span(phi.terms()),
            Source::Cocycle(phi) => phi.terms().and_then(terms_span),
            Source::SingleSite(k) => k.span(),
        }
    }

    /// Unnormalised log weights over all patterns on `window`, and a bound
    /// on the error of each.
    fn log_weights(&self, window: Window, w: &Config) -> Result<(Vec<f64>, f64)> {
        let k = self.alphabet.size();
        let count = checked_count(k, window.len(), self.cap)?;
        let (lo, hi) = (window.lo(), window.hi());
        let entries: Vec<Bounded> = match &self.source {
            Source::Interaction(phi) => crate::par::map_indexed(count, |idx| {
                let p = Pattern::from_index(window, k, idx);
                let h = phi.hamiltonian_view(&View::patched(w, lo, p.letters()), window);
                Bounded { value: -h.value, error: h.error }
            }),
            Source::Cocycle(phi) => match phi.terms() {
                Some(terms) => crate::par::map_indexed(count, |idx| {
                    let p = Pattern::from_index(window, k, idx);
                    terms.meeting(&View::patched(w, lo, p.letters()), lo, hi, k)
                }),
                None => {
                    let reference = w.with_pattern(&Pattern::constant(window, self.alphabet.background()));
                    crate::par::try_map_indexed(count, |idx| {
                        let p = Pattern::from_index(window, k, idx);
                        let r = cocycle::rho(phi, &w.with_pattern(&p), &reference, KERNEL_TOL)?;
                        Ok::<_, Error>(Bounded { value: r.value, error: r.error })
                    })?
                }
            },
            Source::SingleSite(kernel) => {
                let a = self.alphabet.background();
                crate::par::try_map_indexed(count, |idx| {
                    let p = Pattern::from_index(window, k, idx);
                    let mut acc = 0.0;
                    for (off, j) in window.sites().enumerate() {
                        let x = p.letters()[off];
                        if x == a {
                            continue;
                        }
                        // xi on [lo, j), a on [j, hi]
                        let mut letters = p.letters().to_vec();
                        letters[off..].fill(a);
                        let c = w.with_pattern(&Pattern::new(window, letters)?).shift(j);
                        acc += kernel.log_prob(x, &c)? - kernel.log_prob(a, &c)?;
                    }
                    Ok::<_, Error>(Bounded::exact(acc))
                })?
            }
        };
        let error = entries.iter().fold(0.0f64, |m, b| m.max(b.error));
        Ok((entries.into_iter().map(|b| b.value).collect(), error))
    }

    /// `log gamma_window(. | w)` for all patterns.
    pub fn kernel_table(&self, window: Window, w: &Config) -> Result<KernelTable> {
        let (weights, err) = self.log_weights(window, w)?;
        let z = log_sum_exp(&weights);
        let log_probs: Vec<f64> = weights.iter().map(|x| x - z).collect();
        if let Some(i) = log_probs.iter().position(|&l| !(l >= LOG_FLOOR)) {
            let p = Pattern::from_index(window, self.alphabet.size(), i);
            return Err(Error::NullKernel(format!("pattern {:?} on {window}", p.letters())));
        }
        Ok(KernelTable { window, log_probs, error: 2.0 * err })
    }

    pub fn kernel(&self, window: Window, p: &Pattern, w: &Config, tol: f64) -> Result<KernelValue> {
        check_tol(tol)?;
        if p.window() != window {
            return Err(Error::InvalidInput(format!("pattern lives on {}, not {window}", p.window())));
        }
        let t = self.kernel_table(window, w)?;
        if t.error > tol {
            return Err(Error::TolUnreachable { tol, reason: format!("kernel error {:e}", t.error) });
        }
        Ok(t.value(p, self.alphabet.size()))
    }

    /// `log gamma_0(w_0 | anchor-filled left of S^i w) - log gamma_0(anchor | same)`.
    pub(crate) fn half_line_log_ratio(&self, view: &View, i: i64, anchor: Symbol) -> Result<Bounded> {
        let c = view.materialize().shift(i).theta_replace(None, Some(-1), anchor);
        let t = self.kernel_table(Window::site(0), &c)?;
        let x = c.get(0) as usize;
        Ok(Bounded { value: t.log_probs[x] - t.log_probs[anchor as usize], error: 2.0 * t.error })
    }
}

pub fn kernel_from_interaction(
    phi: &Interaction,
    window: Window,
    p: &Pattern,
    w: &Config,
    tol: f64,
) -> Result<KernelValue> {
    Specification::from_interaction(phi.clone()).kernel(window, p, w, tol)
}

pub fn kernel_from_cocycle(phi: &Potential, window: Window, p: &Pattern, w: &Config, tol: f64) -> Result<KernelValue> {
    Specification::from_cocycle(phi.clone()).kernel(window, p, w, tol)
}

/// `phi_gamma` anchored at the alphabet's distinguished letter.
pub fn phi_from_spec(spec: &Specification) -> Result<Potential> {
    phi_from_spec_with_anchor(spec, spec.alphabet().background())
}

/// `phi_gamma(w) = log gamma_0(w_0 | a_{<0} w_{>0}) / gamma_0(a | a_{<0} w_{>0})`.
pub fn phi_from_spec_with_anchor(spec: &Specification, anchor: Symbol) -> Result<Potential> {
    if anchor as usize >= spec.alphabet().size() {
        return Err(Error::InvalidInput("anchor letter is not in the alphabet".into()));
    }
    // positivity probe on the anchor background
    spec.kernel_table(Window::site(0), &Config::constant(anchor))?;
    let k = spec.alphabet().size();
    let terms = match spec.source() {
        Source::Interaction(phi) => Some(half_line_terms(&phi.terms().scaled(-1.0), anchor, k)?),
        Source::Cocycle(phi) => match phi.terms() {
            Some(t) => Some(half_line_terms(t, anchor, k)?),
            None => None,
        },
        Source::SingleSite(kernel) => match kernel.span() {
            Some((_, hi)) => {
                let r = hi.max(0) as usize + 1;
                let count = checked_count(k, r, spec.budget())?;
                let w = Window::new(0, r as i64 - 1)?;
                let base = Config::constant(anchor);
                let table = crate::par::try_map_indexed(count, |idx| {
                    let p = Pattern::from_index(w, k, idx);
                    spec.half_line_log_ratio(&View::patched(&base, 0, p.letters()), 0, anchor).map(|b| b.value)
                })?;
                let sites = (0..r as i64).collect();
                Some(Terms::new(vec![LocalTerm::new(sites, table, k)?], vec![]))
            }
            None => None,
        },
    };
    Ok(Potential::half_line(spec.clone(), anchor, terms))
}

/// Expansion of `w -> rho(a_{<0} w_0 w_{>0}, a_{<0} a w_{>0})` for the
/// potential whose anchored expansion is `terms`.
fn half_line_terms(terms: &Terms, a: Symbol, k: usize) -> Result<Terms> {
    let mut locals = Vec::new();
    for t in terms.locals() {
        for (pos, &s) in t.sites().iter().enumerate() {
            // the translate anchored at -s puts its pos-th site on 0
            let rel: Vec<i64> = t.sites().iter().map(|&q| q - s).collect();
            let kept: Vec<i64> = rel[pos..].to_vec();
            let table = {
                let count = checked_count(k, kept.len(), DEFAULT_BUDGET)?;
                let kw = Window::new(0, kept.len() as i64 - 1)?;
                (0..count)
                    .map(|idx| {
                        let u = Pattern::from_index(kw, k, idx);
                        let mut full: Vec<Symbol> = vec![a; pos];
                        full.extend_from_slice(u.letters());
                        let with = t.table()[word_index(&full, k)];
                        full[pos] = a;
                        with - t.table()[word_index(&full, k)]
                    })
                    .collect()
            };
            locals.push(LocalTerm::new(kept, table, k)?);
        }
    }
    let mut pairs = Vec::new();
    let mut site0 = vec![0.0; k];
    for p in terms.pairs() {
        let t = p.table();
        let shifted: Vec<f64> = (0..k * k).map(|i| t[i] - t[a as usize * k + i % k]).collect();
        pairs.push(PowerLawPair::new(p.coupling(), p.alpha(), p.start(), p.end(), shifted, k)?);
        let w = p.weight_sum().value;
        for (x, v) in site0.iter_mut().enumerate() {
            *v += p.coupling() * w * (t[a as usize * k + x] - t[a as usize * k + a as usize]);
        }
    }
    if site0.iter().any(|&v| v != 0.0) {
        locals.push(LocalTerm::new(vec![0], site0, k)?);
    }
    Ok(Terms::new(locals, pairs))
}

/// `|gamma_D(xi|w)/gamma_D(zeta|w) - gamma_L(xi w_{L\D}|w)/gamma_L(zeta w_{L\D}|w)|`.
pub fn bar_moving_residual(
    spec: &Specification,
    delta: Window,
    lambda: Window,
    xi: &Pattern,
    zeta: &Pattern,
    w: &Config,
) -> Result<f64> {
    if !lambda.contains_window(&delta) || xi.window() != delta || zeta.window() != delta {
        return Err(Error::InvalidInput("need xi, zeta on Delta and Delta inside Lambda".into()));
    }
    let k = spec.alphabet().size();
    let small = spec.kernel_table(delta, w)?;
    let big = spec.kernel_table(lambda, w)?;
    let lift = |p: &Pattern| w.with_pattern(p).pattern(lambda);
    let l1 = small.log_probs[xi.index(k)] - small.log_probs[zeta.index(k)];
    let l2 = big.log_probs[lift(xi).index(k)] - big.log_probs[lift(zeta).index(k)];
    Ok((l1.exp() - l2.exp()).abs())
}

/// `|gamma_L(p|w) - (gamma_L gamma_V)(p|w)|` by exact enumeration.
pub fn consistency_residual(spec: &Specification, v: Window, lambda: Window, p: &Pattern, w: &Config) -> Result<f64> {
    if !lambda.contains_window(&v) || p.window() != lambda {
        return Err(Error::InvalidInput("need V inside Lambda and p on Lambda".into()));
    }
    let k = spec.alphabet().size();
    checked_count(k, lambda.len() + v.len(), spec.budget())?;
    let big = spec.kernel_table(lambda, w)?;
    let pv = p.restrict(v)?;
    let mut composed = 0.0;
    for idx in 0..big.log_probs.len() {
        let eta = Pattern::from_index(lambda, k, idx);
        let outside_agrees = lambda.sites().all(|i| v.contains(i) || eta.get(i) == p.get(i));
        if !outside_agrees {
            continue;
        }
        let inner = spec.kernel_table(v, &w.with_pattern(&eta))?;
        composed += big.log_probs[idx].exp() * inner.log_probs[pv.index(k)].exp();
    }
    Ok((big.log_probs[p.index(k)].exp() - composed).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecPressure {
    /// `-(1/|L_n|) log gamma_{L_n}(a | w)` for `n = 1..=n_max`.
    pub terms: Vec<f64>,
    /// Limit from fitting `c0 + c1/n` to the last three terms.
    pub limit: f64,
}

pub fn spec_pressure(spec: &Specification, n_max: usize, w: &Config) -> Result<SpecPressure> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    checked_count(spec.alphabet().size(), 2 * n_max + 1, spec.budget())?;
    let a = spec.alphabet().background();
    let mut terms = Vec::with_capacity(n_max);
    for n in 1..=n_max as u64 {
        let lam = Window::centered(n);
        let t = spec.kernel_table(lam, w)?;
        let idx = Pattern::constant(lam, a).index(spec.alphabet().size());
        terms.push(-t.log_probs[idx] / lam.len() as f64);
    }
    let limit = extrapolate_inverse_n(&terms);
    Ok(SpecPressure { terms, limit })
}

/// Least-squares `c0` of `c0 + c1/n` through the last three points (fewer
/// if unavailable); `terms[i]` belongs to `n = i + 1`.
fn extrapolate_inverse_n(terms: &[f64]) -> f64 {
    let m = terms.len();
    if m == 1 {
        return terms[0];
    }
    let from = m.saturating_sub(3);
    let pts: Vec<(f64, f64)> = (from..m).map(|i| (1.0 / (i + 1) as f64, terms[i])).collect();
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my - (sxy / sxx) * mx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// `|sum_{i in L_n} phi(S^i sigma) + H_{L_n}(sigma_{L_n} eta_{L_n^c})|`.
    pub gap: f64,
    /// `sum_{i in L_n} sum_{V containing i, V not in L_n} ||Phi_V||`.
    pub bound: f64,
    /// Numerical error bound on `gap`.
    pub error: f64,
}

impl GapReport {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound + self.error
    }
}

pub fn hamiltonian_birkhoff_gap(phi: &Interaction, n: u64, sigma: &Config, eta: &Config) -> Result<GapReport> {
    let pot = potential_from_interaction(phi);
    let lam = Window::centered(n);
    let view = View::of(sigma);
    let mut s = Bounded::ZERO;
    for i in lam.sites() {
        s = s + pot.eval_view(&view, i)?;
    }
    let mixed = eta.with_pattern(&sigma.pattern(lam));
    let h = phi.hamiltonian_view(&View::of(&mixed), lam);
    let total = s + h;
    let round = 32.0 * f64::EPSILON * (s.value.abs() + h.value.abs());
    Ok(GapReport {
        gap: total.value.abs(),
        bound: phi.terms().crossing_bound(lam.lo(), lam.hi()),
        error: total.error + round,
    })
}

/// `(1/n) log [gamma(sigma|w)/gamma(a|w) * gamma(a|eta)/gamma(sigma|eta)]`
/// on the window `[0, n]`.
pub fn four_kernel_ratio(spec: &Specification, sigma: &Pattern, w: &Config, eta: &Config) -> Result<f64> {
    let win = sigma.window();
    if win.lo() != 0 || win.hi() < 1 {
        return Err(Error::InvalidInput("sigma must live on [0, n] with n >= 1".into()));
    }
    let k = spec.alphabet().size();
    let a = Pattern::constant(win, spec.alphabet().background()).index(k);
    let s = sigma.index(k);
    let tw = spec.kernel_table(win, w)?;
    let te = spec.kernel_table(win, eta)?;
    let l = tw.log_probs[s] - tw.log_probs[a] + te.log_probs[a] - te.log_probs[s];
    Ok(l / win.hi() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::zeta;

    fn spins() -> Alphabet {
        Alphabet::spins()
    }

    fn ising_spec() -> Specification {
        Specification::from_interaction(Interaction::ising(spins(), 0.5, 0.0).unwrap())
    }

    #[test]
    fn ising_single_site_kernel() {
        let g = ising_spec();
        let p = Pattern::constant(Window::site(0), 1);
        let v = g.kernel(Window::site(0), &p, &Config::constant(1), 1e-12).unwrap();
        assert!((v.prob - 0.8807970779778824).abs() < 1e-15);
        assert!((v.log_prob.exp() - v.prob).abs() < 1e-16);
    }

    #[test]
    fn zero_interaction_is_uniform() {
        let g = Specification::from_interaction(Interaction::empty(Alphabet::numbered(3).unwrap()));
        let t = g.kernel_table(Window::new(0, 1).unwrap(), &Config::constant(2).with(5, 0)).unwrap();
        assert!(t.probs().iter().all(|p| (p - 1.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn cocycle_kernels_match_boltzmann_kernels() {
        let inter = Interaction::ising(spins(), 0.5, 0.2).unwrap();
        let gi = Specification::from_interaction(inter.clone());
        let gc = Specification::from_cocycle(potential_from_interaction(&inter));
        let w = Config::constant(1).with(-3, 0).with(1, 0).with(4, 0);
        for lam in Window::new(-2, 2).unwrap().sub_windows() {
            let a = gi.kernel_table(lam, &w).unwrap();
            let b = gc.kernel_table(lam, &w).unwrap();
            let s: f64 = a.probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            for (x, y) in a.log_probs.iter().zip(&b.log_probs) {
                assert!((x.exp() - y.exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dyson_single_site_sigmoid() {
        let d = Potential::dyson(spins(), 0.0, 0.3, 3.0).unwrap();
        let v = kernel_from_cocycle(
            &d,
            Window::site(0),
            &Pattern::constant(Window::site(0), 1),
            &Config::constant(1),
            1e-10,
        )
        .unwrap();
        let x = 2.0 * (2.0 * 0.3 * zeta(3.0).value);
        let sig = 1.0 / (1.0 + (-x).exp());
        assert!((v.prob - sig).abs() < 1e-12);
        assert!((v.prob - 0.8088365883390418).abs() < 1e-6);
    }

    #[test]
    fn phi_gamma_examples() {
        let e = Alphabet::numbered(2).unwrap();
        let g = Specification::independent(e, &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let phi = phi_from_spec(&g).unwrap();
        let v = phi.eval(&Config::constant(0).with(0, 1), 1e-12).unwrap();
        assert!((v.value - 2f64.ln()).abs() < 1e-15);
        assert_eq!(phi.eval(&Config::constant(1).with(0, 0), 1e-12).unwrap().value, 0.0);

        let pg = phi_from_spec(&ising_spec()).unwrap();
        let w = Config::constant(1).with(0, 0);
        assert!((pg.eval(&w, 1e-12).unwrap().value + 2.0).abs() < 1e-14);
    }

    #[test]
    fn half_line_expansion_agrees_with_kernel_route() {
        let d = Potential::dyson(spins(), 0.1, 0.4, 2.5).unwrap();
        let g = Specification::from_cocycle(d);
        let pg = phi_from_spec(&g).unwrap();
        let opaque = Potential::half_line(g.clone(), 1, None);
        let w = Config::constant(1).with(0, 0).with(2, 0).with(-3, 0).with(7, 0);
        for i in -1..4 {
            let a = pg.eval_at(&w, i, 1e-10).unwrap().value;
            let b = opaque.eval_at(&w, i, 1e-10).unwrap().value;
            assert!((a - b).abs() < 1e-12, "{i}: {a} vs {b}");
        }
    }

    #[test]
    fn bar_moving_and_consistency() {
        let g = ising_spec();
        let w = Config::constant(1).with(-2, 0).with(2, 0);
        let lam = Window::new(-1, 1).unwrap();
        let d = Window::site(0);
        let xi = Pattern::constant(d, 0);
        let zeta = Pattern::constant(d, 1);
        assert!(bar_moving_residual(&g, d, lam, &xi, &zeta, &w).unwrap() < 1e-11);
        assert_eq!(bar_moving_residual(&g, d, lam, &xi, &xi, &w).unwrap(), 0.0);
        assert!(
            bar_moving_residual(&g, lam, lam, &Pattern::constant(lam, 0), &Pattern::constant(lam, 1), &w).unwrap()
                == 0.0
        );
        for idx in 0..8 {
            let p = Pattern::from_index(lam, 2, idx);
            assert!(consistency_residual(&g, d, lam, &p, &w).unwrap() < 1e-11);
            assert!(consistency_residual(&g, lam, lam, &p, &w).unwrap() < 1e-15);
        }
    }

    #[test]
    fn pressure_of_independent_and_flat_specs() {
        let e = Alphabet::numbered(2).unwrap();
        let g = Specification::independent(e.clone(), &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let sp = spec_pressure(&g, 4, &Config::constant(1)).unwrap();
        assert!(sp.terms.iter().all(|t| (t - 3f64.ln()).abs() < 1e-13));
        let flat = Specification::from_interaction(Interaction::empty(e));
        let sp = spec_pressure(&flat, 3, &Config::constant(0)).unwrap();
        assert!(sp.terms.iter().all(|t| (t - 2f64.ln()).abs() < 1e-13));
        assert!((sp.limit - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gap_bound_is_constant_for_nearest_neighbour() {
        let phi = Interaction::ising(spins(), 0.5, 0.0).unwrap();
        let s = Config::constant(1);
        let e = Config::constant(1);
        for n in [3, 5, 8] {
            let r = hamiltonian_birkhoff_gap(&phi, n, &s, &e).unwrap();
            assert_eq!(r.bound, 1.0);
            assert!(r.holds());
        }
        let empty = hamiltonian_birkhoff_gap(&Interaction::empty(spins()), 4, &s, &e).unwrap();
        assert_eq!((empty.gap, empty.bound), (0.0, 0.0));
    }

    #[test]
    fn null_kernels_are_reported() {
        let e = Alphabet::numbered(2).unwrap();
        let huge = LocalTerm::new(vec![0], vec![0.0, 2000.0], 2).unwrap();
        let g = Specification::from_interaction(Interaction::new(e, Terms::new(vec![huge], vec![])).unwrap());
        let err = g.kernel_table(Window::site(0), &Config::constant(0)).unwrap_err();
        assert_eq!(err.kind(), "null_kernel");
    }
}
