//! Theorem-level checkers: Bowen ratio tables, weak cohomology, relative
//! entropy curves and the specification/potential round trip.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::check_tol;
use crate::potential::Potential;
use crate::shift::{checked_count, Config, Pattern, Symbol, Window};
use crate::specification::{phi_from_spec, Specification};
use crate::transfer::{entropy, integrate, MarkovMeasure};

/// Tolerance used for Birkhoff sums inside ratio tables.
const SUM_TOL: f64 = 1e-9;

/// How a cylinder `[sigma]` on `[0, n-1]` is extended to a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Extension {
    /// The distinguished letter on both sides.
    Background,
    /// A fixed letter on both sides.
    Fill(Symbol),
    /// `sigma` repeated periodically.
    Periodic,
}

impl Extension {
    fn extend(&self, p: &Pattern, background: Symbol) -> Result<Config> {
        match *self {
            Extension::Background => Ok(Config::from_pattern(background, p)),
            Extension::Fill(s) => Ok(Config::from_pattern(s, p)),
            Extension::Periodic => Config::periodic(p.letters().to_vec()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BowenRow {
    pub n: usize,
    /// Smallest `mu([sigma]) / exp(S_n phi(sigma) - n P)`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max_ratio, 1 / min_ratio)`.
    #[serde(rename = "C_n")]
    pub c_n: f64,
    pub log_c_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BowenReport {
    pub rows: Vec<BowenRow>,
    /// Inclusive range of `n` used for the fit.
    pub fit_range: (usize, usize),
    /// Least-squares slope of `log C_n` against `n`.
    pub slope: f64,
    pub intercept: f64,
}

/// Default fit range: the last `ceil(n_max / 2)` values of `n`.
pub fn default_fit_range(n_max: usize) -> (usize, usize) {
    (n_max - n_max.div_ceil(2) + 1, n_max)
}

pub fn bowen_report(
    mu: &MarkovMeasure,
    phi: &Potential,
    pressure: f64,
    n_max: usize,
    extension: Extension,
    fit: Option<(usize, usize)>,
) -> Result<BowenReport> {
    let k = phi.alphabet().size();
    if k != mu.alphabet_size() {
        return Err(Error::AlphabetMismatch("measure and potential alphabets differ".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let fit_range = fit.unwrap_or_else(|| default_fit_range(n_max));
    if fit_range.0 < 1 || fit_range.0 > fit_range.1 || fit_range.1 > n_max {
        return Err(Error::InvalidInput(format!("fit range {fit_range:?} is not inside [1, {n_max}]")));
    }
    checked_count(k, n_max, crate::shift::DEFAULT_BUDGET)?;
    let a = phi.alphabet().background();
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let probs = mu.cylinder_probs(n, crate::shift::DEFAULT_BUDGET)?;
        let w = Window::new(0, n as i64 - 1)?;
        let logs = crate::par::try_map_indexed(probs.len(), |idx| {
            let p = Pattern::from_index(w, k, idx);
            let c = extension.extend(&p, a)?;
            let s = phi.birkhoff_sum(&c, n, SUM_TOL)?;
            Ok::<_, Error>(probs[idx].ln() - s.value + n as f64 * pressure)
        })?;
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_c_n = hi.max(-lo) + 0.0;
        rows.push(BowenRow { n, min_ratio: lo.exp(), max_ratio: hi.exp(), c_n: log_c_n.exp(), log_c_n });
    }
    let pts: Vec<(f64, f64)> = rows[fit_range.0 - 1..fit_range.1].iter().map(|r| (r.n as f64, r.log_c_n)).collect();
    let (slope, intercept) = least_squares(&pts);
    Ok(BowenReport { rows, fit_range, slope, intercept })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohomologyReport {
    /// `Delta(tau) = int phi_gamma dtau - int phi dtau` per measure.
    pub deltas: Vec<f64>,
    /// Error bound of each delta.
    pub errors: Vec<f64>,
    /// `-phi(a)` for the constant configuration at the distinguished letter.
    pub target: f64,
    /// Largest pairwise difference between deltas.
    pub spread: f64,
    /// Largest `|Delta(tau) - target|`.
    pub max_deviation: f64,
    pub holds: bool,
}

/// Compares `phi` with the potential extracted from its own cocycle
/// specification, integrated against every measure in `taus`.
pub fn weak_cohomology_check(phi: &Potential, taus: &[MarkovMeasure], tol: f64) -> Result<CohomologyReport> {
    check_tol(tol)?;
    if taus.is_empty() {
        return Err(Error::InvalidInput("at least one measure is required".into()));
    }
    let spec = Specification::from_cocycle(phi.clone());
    let extracted = phi_from_spec(&spec)?;
    let a = phi.alphabet().background();
    let inner_tol = tol / 8.0;
    let target = -phi.value_at_constant(a, inner_tol)?.value;
    let mut deltas = Vec::with_capacity(taus.len());
    let mut errors = Vec::with_capacity(taus.len());
    for tau in taus {
        let g = integrate(tau, &extracted, inner_tol)?;
        let f = integrate(tau, phi, inner_tol)?;
        deltas.push(g.value - f.value);
        errors.push(g.error + f.error);
    }
    let hi = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let max_deviation = deltas.iter().map(|d| (d - target).abs()).fold(0.0, f64::max);
    let spread = hi - lo;
    Ok(CohomologyReport { deltas, errors, target, spread, max_deviation, holds: spread <= tol && max_deviation <= tol })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyCurve {
    /// `H_n(tau | mu)` over cylinders of length `n = 1..=n_max`.
    pub h: Vec<f64>,
    /// `H_{n+1} - H_n` for `n = 1..n_max`.
    pub diffs: Vec<f64>,
    /// `P - h(tau) - int phi dtau`.
    pub predicted: f64,
}

pub fn relative_entropy_curve(
    tau: &MarkovMeasure,
    mu: &MarkovMeasure,
    phi: &Potential,
    pressure: f64,
    n_max: usize,
) -> Result<EntropyCurve> {
    if tau.alphabet_size() != mu.alphabet_size() || phi.alphabet().size() != mu.alphabet_size() {
        return Err(Error::AlphabetMismatch("measures and potential must share an alphabet".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let cap = crate::shift::DEFAULT_BUDGET;
    let mut h = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let t = tau.cylinder_probs(n, cap)?;
        let m = mu.cylinder_probs(n, cap)?;
        let mut s = 0.0;
        for (&pt, &pm) in t.iter().zip(&m) {
            if pt > 0.0 {
                if pm <= 0.0 {
                    return Err(Error::NonAbsolutelyContinuous);
                }
                s += pt * (pt / pm).ln();
            }
        }
        h.push(s);
    }
    let diffs = h.windows(2).map(|w| w[1] - w[0]).collect();
    let predicted = pressure - entropy(tau) - integrate(tau, phi, 1e-12)?.value;
    Ok(EntropyCurve { h, diffs, predicted })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundtripReport {
    /// Largest kernel deviation found.
    pub residual: f64,
    /// Sum of the numerical error bounds of the two kernels at that point.
    pub bound: f64,
    /// Number of (window, boundary) pairs compared.
    pub comparisons: u64,
}

/// `max |gamma'_L(p | w) - gamma_L(p | w)|` where `gamma'` is rebuilt from
/// the potential extracted from `gamma`. `L` ranges over the contiguous
/// sub-windows of `lambda_max`; boundaries take every value on the sites
/// within `radius` of `L` and a constant letter beyond.
pub fn roundtrip_residual(spec: &Specification, lambda_max: Window, radius: u64) -> Result<RoundtripReport> {
    let rebuilt = Specification::from_cocycle(phi_from_spec(spec)?).with_budget(spec.budget());
    let k = spec.alphabet().size();
    let ring = 2 * radius as usize;
    let ring_count = checked_count(k, ring, spec.budget())?;
    let mut worst = RoundtripReport { residual: 0.0, bound: 0.0, comparisons: 0 };
    for lam in lambda_max.sub_windows() {
        let reach = lam.padded(radius);
        let per_window = crate::par::try_map_indexed(ring_count * k, |idx| {
            let fill = (idx / ring_count) as Symbol;
            let outer = Pattern::from_index(Window::new(0, ring as i64 - 1)?, k, idx % ring_count);
            let mut letters = Vec::with_capacity(reach.len());
            let mut it = outer.letters().iter();
            for j in reach.sites() {
                letters.push(if lam.contains(j) { fill } else { *it.next().unwrap_or(&fill) });
            }
            let w = Config::constant(fill).with_pattern(&Pattern::new(reach, letters)?);
            let t1 = spec.kernel_table(lam, &w)?;
            let t2 = rebuilt.kernel_table(lam, &w)?;
            let dev =
                t1.log_probs.iter().zip(&t2.log_probs).map(|(x, y)| (x.exp() - y.exp()).abs()).fold(0.0, f64::max);
            Ok::<_, Error>((dev, t1.error + t2.error))
        })?;
        for (dev, err) in per_window {
            worst.comparisons += 1;
            if dev > worst.residual {
                worst.residual = dev;
            }
            worst.bound = worst.bound.max(err);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::Interaction;
    use crate::numeric::zeta;
    use crate::shift::Alphabet;
    use crate::transfer::{equilibrium_markov, pressure};

    fn spins() -> Alphabet {
        Alphabet::spins()
    }

    #[test]
    fn fit_range_default() {
        assert_eq!(default_fit_range(12), (7, 12));
        assert_eq!(default_fit_range(5), (3, 5));
        assert_eq!(default_fit_range(1), (1, 1));
    }

    #[test]
    fn flat_and_bernoulli_ratios_are_one() {
        let phi = Potential::zero(Alphabet::numbered(3).unwrap());
        let mu = MarkovMeasure::uniform(3).unwrap();
        let r = bowen_report(&mu, &phi, 3f64.ln(), 6, Extension::Background, None).unwrap();
        assert!(r.rows.iter().all(|row| (row.c_n - 1.0).abs() < 1e-12));
        let b = Potential::bernoulli_log(Alphabet::numbered(2).unwrap(), &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let mb = MarkovMeasure::bernoulli(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let r = bowen_report(&mb, &b, 0.0, 8, Extension::Periodic, None).unwrap();
        assert!(r.rows.iter().all(|row| (row.c_n - 1.0).abs() < 1e-12));
        assert!(r.slope.abs() < 1e-12);
    }

    #[test]
    fn ising_ratio_is_constant_and_matches_closed_form() {
        let phi = Potential::ising(spins(), 0.5, 0.0).unwrap();
        let mu = equilibrium_markov(&phi).unwrap();
        let p = pressure(&phi).unwrap();
        let r = bowen_report(&mu, &phi, p, 10, Extension::Background, None).unwrap();
        // ratio = pi(s0) lambda / exp(phi(s_{n-1}, +)) with P symmetric
        let e = 0.5f64.exp();
        let lam = e + 1.0 / e;
        let expected_max = 0.5 * lam * e;
        let expected_min = 0.5 * lam / e;
        for row in &r.rows[1..] {
            assert!((row.max_ratio - expected_max).abs() < 1e-12);
            assert!((row.min_ratio - expected_min).abs() < 1e-12);
        }
        assert!(r.slope.abs() < 1e-10);
        // a different extension moves log-ratios by at most var_0 + var_1
        let other = bowen_report(&mu, &phi, p, 10, Extension::Fill(0), None).unwrap();
        let v = phi.variation_estimate(0, 1 << 20).unwrap().value + phi.variation_estimate(1, 1 << 20).unwrap().value;
        for (x, y) in r.rows.iter().zip(&other.rows) {
            assert!((x.log_c_n - y.log_c_n).abs() <= v + 1e-12);
        }
    }

    #[test]
    fn wrong_pressure_gives_linear_growth() {
        let phi = Potential::ising(spins(), 0.5, 0.0).unwrap();
        let mu = equilibrium_markov(&phi).unwrap();
        let p = pressure(&phi).unwrap();
        let r = bowen_report(&mu, &phi, p + 0.1, 12, Extension::Background, Some((6, 12))).unwrap();
        assert!((r.slope - 0.1).abs() < 1e-10, "{}", r.slope);
    }

    fn taus() -> Vec<MarkovMeasure> {
        vec![
            MarkovMeasure::uniform(2).unwrap(),
            MarkovMeasure::bernoulli(&[1.0 / 3.0, 2.0 / 3.0]).unwrap(),
            MarkovMeasure::from_letter_matrix(vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap(),
        ]
    }

    #[test]
    fn cohomology_ising_and_flat() {
        let r = weak_cohomology_check(&Potential::zero(spins()), &taus(), 1e-10).unwrap();
        assert!(r.deltas.iter().all(|d| d.abs() < 1e-14) && r.holds);
        let phi = Potential::ising(spins(), 0.5, 0.1).unwrap();
        let r = weak_cohomology_check(&phi, &taus(), 1e-8).unwrap();
        assert!((r.target + 0.6).abs() < 1e-15);
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn cohomology_dyson() {
        let phi = Potential::dyson(spins(), 0.0, 0.3, 3.0).unwrap();
        let r = weak_cohomology_check(&phi, &taus(), 1e-8).unwrap();
        assert!((r.target + 0.3 * zeta(3.0).value).abs() < 1e-12);
        assert!((r.target + 0.36061707094787826).abs() < 1e-12);
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn entropy_curves() {
        let b = Potential::bernoulli_log(Alphabet::numbered(2).unwrap(), &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let mb = MarkovMeasure::bernoulli(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let u = MarkovMeasure::uniform(2).unwrap();
        let c = relative_entropy_curve(&u, &mb, &b, 0.0, 8).unwrap();
        for (i, h) in c.h.iter().enumerate() {
            assert!((h / (i + 1) as f64 - 0.05889151782819173).abs() < 1e-12);
        }
        assert!((c.predicted - 0.05889151782819173).abs() < 1e-12);
        let same = relative_entropy_curve(&mb, &mb, &b, 0.0, 6).unwrap();
        assert!(same.h.iter().all(|h| h.abs() < 1e-15));
        let phi = Potential::ising(spins(), 0.5, 0.0).unwrap();
        let mu = equilibrium_markov(&phi).unwrap();
        let c = relative_entropy_curve(&u, &mu, &phi, pressure(&phi).unwrap(), 10).unwrap();
        assert!((c.predicted - 0.12011450695827752).abs() < 1e-12);
        assert!(c.diffs.iter().all(|d| (d - c.predicted).abs() < 1e-12));
    }

    #[test]
    fn roundtrip_examples() {
        let ind = Specification::independent(Alphabet::numbered(2).unwrap(), &[0.25, 0.75]).unwrap();
        assert!(roundtrip_residual(&ind, Window::new(0, 2).unwrap(), 2).unwrap().residual <= 1e-12);
        let zero = Specification::from_interaction(Interaction::empty(spins()));
        assert_eq!(roundtrip_residual(&zero, Window::new(0, 1).unwrap(), 2).unwrap().residual, 0.0);
        let ising = Specification::from_interaction(Interaction::ising(spins(), 0.5, 0.2).unwrap());
        let r = roundtrip_residual(&ising, Window::new(0, 2).unwrap(), 3).unwrap();
        assert!(r.residual <= 1e-12, "{r:?}");
        assert_eq!(r.comparisons, 6 * 64 * 2);
    }
}
