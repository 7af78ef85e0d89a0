//! Finite-volume single-site heat-bath sampler.
//!
//! Chains use `ChaCha8Rng::seed_from_u64(seed)` with stream `c` for chain
//! `c`, so every chain is reproducible and independent of thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::shift::{checked_count, Config, Pattern, Symbol, Window};
use crate::specification::Specification;

/// Default number of sweeps discarded before recording.
pub const DEFAULT_BURN_IN: usize = 1000;
/// Largest neighborhood table precomputed for fast updates.
const CACHE_CAP: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Sweeps after burn-in.
    pub sweeps: usize,
    pub burn_in: usize,
    /// Record one sample every `thin` sweeps; `None` means the volume length.
    pub thin: Option<usize>,
    pub seed: u64,
    pub chains: usize,
}

impl RunOptions {
    pub fn new(sweeps: usize, seed: u64) -> Self {
        RunOptions { sweeps, burn_in: DEFAULT_BURN_IN, thin: None, seed, chains: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub volume: Window,
    pub letters: Vec<Symbol>,
    pub boundary: Config,
    pub rng_seed: u64,
    pub sweeps_done: usize,
}

/// Single-site conditional laws, either tabulated over a finite
/// neighborhood or computed on demand.
enum Updater<'a> {
    Cached { lo: i64, hi: i64, k: usize, cdf: Vec<f64> },
    Direct(&'a Specification),
}

impl<'a> Updater<'a> {
    fn new(spec: &'a Specification) -> Result<Self> {
        let k = spec.alphabet().size();
        if let Some((lo, hi)) = spec.neighborhood() {
            let (lo, hi) = (lo.min(0), hi.max(0));
            let width = (hi - lo + 1) as usize;
            if let Ok(count) = checked_count(k, width, CACHE_CAP) {
                let w = Window::new(lo, hi)?;
                let a = spec.alphabet().background();
                let rows = crate::par::try_map_indexed(count, |idx| {
                    let p = Pattern::from_index(w, k, idx);
                    let t = spec.kernel_table(Window::site(0), &Config::constant(a).with_pattern(&p))?;
                    Ok::<_, Error>(cumulative(&t.probs()))
                })?;
                return Ok(Updater::Cached { lo, hi, k, cdf: rows.concat() });
            }
        }
        Ok(Updater::Direct(spec))
    }

    /// Letter at `i` drawn by inverting the conditional law at `u`.
    fn draw(&self, state: &ChainState, i: i64, u: f64) -> Result<Symbol> {
        let pick = |cdf: &[f64]| cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) as Symbol;
        match self {
            Updater::Cached { lo, hi, k, cdf } => {
                let mut idx = 0usize;
                for j in i + lo..=i + hi {
                    idx = idx * k + letter(state, j) as usize;
                }
                Ok(pick(&cdf[idx * k..(idx + 1) * k]))
            }
            Updater::Direct(_) => Ok(pick(&self.cdf(state, i)?)),
        }
    }

    /// Cumulative law of the letter at `i` given the current state.
    fn cdf(&self, state: &ChainState, i: i64) -> Result<Vec<f64>> {
        match self {
            Updater::Cached { lo, hi, k, cdf } => {
                let mut idx = 0usize;
                for j in i + lo..=i + hi {
                    idx = idx * k + letter(state, j) as usize;
                }
                Ok(cdf[idx * k..(idx + 1) * k].to_vec())
            }
            Updater::Direct(spec) => {
                let c = state.boundary.with_pattern(&Pattern::new(state.volume, state.letters.clone())?);
                Ok(cumulative(&spec.kernel_table(Window::site(i), &c)?.probs()))
            }
        }
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

#[inline]
fn letter(state: &ChainState, j: i64) -> Symbol {
    if state.volume.contains(j) {
        state.letters[(j - state.volume.lo()) as usize]
    } else {
        state.boundary.get(j)
    }
}

/// One left-to-right sweep.
fn sweep(up: &Updater, state: &mut ChainState, rng: &mut ChaCha8Rng) -> Result<()> {
    for i in state.volume.sites() {
        let u: f64 = rng.random();
        let x = up.draw(state, i, u)?;
        state.letters[(i - state.volume.lo()) as usize] = x;
    }
    state.sweeps_done += 1;
    Ok(())
}

fn run_chain(up: &Updater, volume: Window, boundary: &Config, opts: &RunOptions, chain: u64) -> Result<Vec<Pattern>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(chain);
    let mut state = ChainState {
        volume,
        letters: boundary.pattern(volume).letters().to_vec(),
        boundary: boundary.clone(),
        rng_seed: opts.seed,
        sweeps_done: 0,
    };
    for _ in 0..opts.burn_in {
        sweep(up, &mut state, &mut rng)?;
    }
    let thin = opts.thin.unwrap_or(volume.len());
    let mut out = Vec::with_capacity(opts.sweeps / thin);
    for s in 1..=opts.sweeps {
        sweep(up, &mut state, &mut rng)?;
        if s % thin == 0 {
            out.push(Pattern::new(volume, state.letters.clone())?);
        }
    }
    Ok(out)
}

/// Runs `opts.chains` independent chains and concatenates their samples in
/// chain order. Each chain records `opts.sweeps / thin` patterns.
pub fn heat_bath_run(
    spec: &Specification,
    volume: Window,
    boundary: &Config,
    opts: &RunOptions,
) -> Result<Vec<Pattern>> {
    if opts.chains == 0 || opts.thin == Some(0) {
        return Err(Error::InvalidInput("chains and thin must be positive".into()));
    }
    let up = Updater::new(spec)?;
    let per_chain = crate::par::try_map_indexed(opts.chains, |c| run_chain(&up, volume, boundary, opts, c as u64))?;
    Ok(per_chain.concat())
}

/// Frequencies of the restrictions of `samples` to `sub`, which must stay
/// `margin` sites away from both ends of the sampled volume.
pub fn empirical_cylinders(samples: &[Pattern], sub: Window, margin: u64) -> Result<BTreeMap<Vec<Symbol>, f64>> {
    let first = samples.first().ok_or_else(|| Error::InvalidInput("no samples".into()))?;
    let vol = first.window();
    let m = margin as i64;
    if sub.lo() - m < vol.lo() || sub.hi() + m > vol.hi() {
        return Err(Error::MarginViolation { lo: sub.lo(), hi: sub.hi() });
    }
    let mut counts: BTreeMap<Vec<Symbol>, u64> = BTreeMap::new();
    for s in samples {
        if s.window() != vol {
            return Err(Error::InvalidInput("samples live on different volumes".into()));
        }
        *counts.entry(s.restrict(sub)?.letters().to_vec()).or_default() += 1;
    }
    let n = samples.len() as f64;
    Ok(counts.into_iter().map(|(p, c)| (p, c as f64 / n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::Interaction;
    use crate::shift::Alphabet;

    fn opts(sweeps: usize, seed: u64) -> RunOptions {
        RunOptions { sweeps, burn_in: 100, thin: Some(1), seed, chains: 2 }
    }

    #[test]
    fn reproducible_given_seed() {
        let spec = Specification::from_interaction(Interaction::ising(Alphabet::spins(), 0.5, 0.0).unwrap());
        let v = Window::new(0, 15).unwrap();
        let a = heat_bath_run(&spec, v, &Config::constant(1), &opts(50, 7)).unwrap();
        let b = heat_bath_run(&spec, v, &Config::constant(1), &opts(50, 7)).unwrap();
        let c = heat_bath_run(&spec, v, &Config::constant(1), &opts(50, 8)).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn independent_frequencies() {
        let spec = Specification::independent(Alphabet::numbered(2).unwrap(), &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let v = Window::new(0, 9).unwrap();
        let s = heat_bath_run(&spec, v, &Config::constant(0), &opts(20_000, 1)).unwrap();
        let f = empirical_cylinders(&s, Window::site(5), 0).unwrap();
        let n = s.len() as f64;
        let sigma = (2.0 / 9.0 / n).sqrt();
        assert!((f[&vec![1]] - 2.0 / 3.0).abs() < 3.0 * sigma, "{f:?}");
    }

    #[test]
    fn cylinder_frequencies_and_margins() {
        let v = Window::new(0, 4).unwrap();
        let one = vec![Pattern::new(v, vec![0, 1, 1, 0, 1]).unwrap()];
        let f = empirical_cylinders(&one, Window::new(1, 3).unwrap(), 1).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[&vec![1, 1, 0]], 1.0);
        let e = empirical_cylinders(&one, Window::new(1, 3).unwrap(), 2).unwrap_err();
        assert_eq!(e, Error::MarginViolation { lo: 1, hi: 3 });
        let two = vec![one[0].clone(), Pattern::constant(v, 0)];
        let f = empirical_cylinders(&two, Window::site(2), 0).unwrap();
        assert_eq!(f.values().sum::<f64>(), 1.0);
    }

    #[test]
    fn cached_and_direct_updates_agree() {
        let spec = Specification::from_interaction(Interaction::ising(Alphabet::spins(), 0.4, 0.3).unwrap());
        let up = Updater::new(&spec).unwrap();
        assert!(matches!(up, Updater::Cached { .. }));
        let direct = Updater::Direct(&spec);
        let state = ChainState {
            volume: Window::new(0, 3).unwrap(),
            letters: vec![0, 1, 1, 0],
            boundary: Config::constant(0),
            rng_seed: 0,
            sweeps_done: 0,
        };
        for i in 0..4 {
            let a = up.cdf(&state, i).unwrap();
            let b = direct.cdf(&state, i).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-14);
        }
    }

    /// The full systematic-scan operator on four sites preserves the
    /// finite-volume Boltzmann law.
    #[test]
    fn scan_preserves_boltzmann_law() {
        let spec = Specification::from_interaction(Interaction::ising(Alphabet::spins(), 0.7, -0.2).unwrap());
        let v = Window::new(0, 3).unwrap();
        let boundary = Config::constant(1).with(-1, 0);
        let up = Updater::new(&spec).unwrap();
        let target = spec.kernel_table(v, &boundary).unwrap().probs();
        let mut dist = target.clone();
        for i in v.sites() {
            let mut next = vec![0.0; 16];
            for (idx, &p) in dist.iter().enumerate() {
                let pat = Pattern::from_index(v, 2, idx);
                let state = ChainState {
                    volume: v,
                    letters: pat.letters().to_vec(),
                    boundary: boundary.clone(),
                    rng_seed: 0,
                    sweeps_done: 0,
                };
                let cdf = up.cdf(&state, i).unwrap();
                let probs = [cdf[0], 1.0 - cdf[0]];
                for (x, q) in probs.iter().enumerate() {
                    let mut letters = pat.letters().to_vec();
                    letters[i as usize] = x as Symbol;
                    next[Pattern::new(v, letters).unwrap().index(2)] += p * q;
                }
            }
            dist = next;
        }
        for (a, b) in dist.iter().zip(&target) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
