//! Alphabets, windows, patterns and configurations of the full shift.
//!
//! A [`Config`] is a point of `E^Z` that agrees with a left background on a
//! left half-line and with a right background on a right half-line, up to a
//! finite overlay. Backgrounds are constant or periodic. This class is closed
//! under shifts, single-site edits and the half-line replacement maps, which
//! is all the infinite-volume formulas downstream ever need.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a letter in its [`Alphabet`].
pub type Symbol = u8;

/// Default cap on the number of patterns any single enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// `base^exp`, or `BudgetExceeded` when it would exceed `cap`.
pub fn checked_count(base: usize, exp: usize, cap: u64) -> Result<usize> {
    let mut n: u128 = 1;
    for _ in 0..exp {
        n *= base as u128;
        if n > cap as u128 {
            // report the full requested count where it fits
            let full = (base as u128).checked_pow(exp as u32).unwrap_or(u128::MAX);
            return Err(Error::BudgetExceeded { requested: full, cap });
        }
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<String>,
    background: Symbol,
}

impl Alphabet {
    pub fn new(symbols: Vec<String>, background: Symbol) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::InvalidInput("alphabet needs at least two symbols".into()));
        }
        if symbols.len() > u8::MAX as usize {
            return Err(Error::InvalidInput("alphabet has too many symbols".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidInput(format!("duplicate symbol {s:?}")));
            }
        }
        if background as usize >= symbols.len() {
            return Err(Error::InvalidInput("background symbol is not in the alphabet".into()));
        }
        Ok(Alphabet { symbols, background })
    }

    /// Symbols `"0", "1", ..., "k-1"` with background `0`.
    pub fn numbered(k: usize) -> Result<Self> {
        Alphabet::new((0..k).map(|i| i.to_string()).collect(), 0)
    }

    /// The spin alphabet `{-1, +1}` with background `+1`.
    pub fn spins() -> Self {
        Alphabet { symbols: vec!["-1".into(), "+1".into()], background: 1 }
    }

    pub fn with_background(&self, background: Symbol) -> Result<Self> {
        Alphabet::new(self.symbols.clone(), background)
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn background(&self) -> Symbol {
        self.background
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        0..self.symbols.len() as Symbol
    }

    pub fn label(&self, s: Symbol) -> &str {
        &self.symbols[s as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, label: &str) -> Option<Symbol> {
        self.symbols.iter().position(|s| s == label).map(|i| i as Symbol)
    }

    /// Spin values when the alphabet is exactly `{-1, +1}` (labels parsed as
    /// integers, any order).
    pub fn spin_values(&self) -> Result<Vec<f64>> {
        let vals: Vec<Option<i64>> =
            self.symbols.iter().map(|s| s.trim_start_matches('+').parse::<i64>().ok()).collect();
        match vals.as_slice() {
            [Some(a), Some(b)] if (*a == -1 && *b == 1) || (*a == 1 && *b == -1) => {
                Ok(vals.iter().map(|v| v.unwrap() as f64).collect())
            }
            _ => Err(Error::AlphabetMismatch(format!("expected spin alphabet {{-1, +1}}, got {:?}", self.symbols))),
        }
    }

    pub fn parse_word(&self, labels: &[String]) -> Result<Vec<Symbol>> {
        labels
            .iter()
            .map(|l| self.index_of(l).ok_or_else(|| Error::InvalidInput(format!("unknown symbol {l:?}"))))
            .collect()
    }
}

/// Finite interval of sites `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    lo: i64,
    hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInput(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    pub fn site(i: i64) -> Self {
        Window { lo: i, hi: i }
    }

    /// `[-n, n]`.
    pub fn centered(n: u64) -> Self {
        Window { lo: -(n as i64), hi: n as i64 }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: i64) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }

    pub fn shifted(&self, k: i64) -> Window {
        Window { lo: self.lo + k, hi: self.hi + k }
    }

    pub fn padded(&self, pad: u64) -> Window {
        Window { lo: self.lo - pad as i64, hi: self.hi + pad as i64 }
    }

    /// All non-empty sub-windows, shortest first.
    pub fn sub_windows(&self) -> Vec<Window> {
        let mut out = Vec::new();
        for len in 1..=self.len() as i64 {
            for lo in self.lo..=self.hi - len + 1 {
                out.push(Window { lo, hi: lo + len - 1 });
            }
        }
        out
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Letters on a window.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    window: Window,
    letters: Vec<Symbol>,
}

impl Pattern {
    pub fn new(window: Window, letters: Vec<Symbol>) -> Result<Self> {
        if letters.len() != window.len() {
            return Err(Error::InvalidInput(format!(
                "pattern has {} letters for a window of length {}",
                letters.len(),
                window.len()
            )));
        }
        Ok(Pattern { window, letters })
    }

    pub fn constant(window: Window, s: Symbol) -> Self {
        Pattern { window, letters: vec![s; window.len()] }
    }

    /// Pattern with lexicographic rank `index` (first site most significant).
    pub fn from_index(window: Window, alphabet_size: usize, mut index: usize) -> Self {
        let mut letters = vec![0; window.len()];
        for slot in letters.iter_mut().rev() {
            *slot = (index % alphabet_size) as Symbol;
            index /= alphabet_size;
        }
        Pattern { window, letters }
    }

    pub fn index(&self, alphabet_size: usize) -> usize {
        word_index(&self.letters, alphabet_size)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn letters(&self) -> &[Symbol] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn get(&self, site: i64) -> Option<Symbol> {
        if self.window.contains(site) {
            Some(self.letters[(site - self.window.lo) as usize])
        } else {
            None
        }
    }

    /// Restriction to a sub-window.
    pub fn restrict(&self, w: Window) -> Result<Pattern> {
        if !self.window.contains_window(&w) {
            return Err(Error::InvalidInput(format!("{w} is not inside {}", self.window)));
        }
        let start = (w.lo - self.window.lo) as usize;
        Ok(Pattern { window: w, letters: self.letters[start..start + w.len()].to_vec() })
    }

    pub fn shifted(&self, k: i64) -> Pattern {
        Pattern { window: self.window.shifted(k), letters: self.letters.clone() }
    }
}

/// Lexicographic rank of a word (first letter most significant).
pub fn word_index(letters: &[Symbol], alphabet_size: usize) -> usize {
    letters.iter().fold(0usize, |acc, &s| acc * alphabet_size + s as usize)
}

/// Iterator over all patterns on a window in lexicographic order.
#[derive(Debug, Clone)]
pub struct Patterns {
    window: Window,
    alphabet_size: usize,
    next: usize,
    count: usize,
}

impl Iterator for Patterns {
    type Item = Pattern;

    fn next(&mut self) -> Option<Pattern> {
        if self.next >= self.count {
            return None;
        }
        let p = Pattern::from_index(self.window, self.alphabet_size, self.next);
        self.next += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.count - self.next;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for Patterns {}

/// All `|E|^len` patterns on `window`, or `BudgetExceeded` above `cap`.
pub fn enumerate_patterns(alphabet: &Alphabet, window: Window, cap: u64) -> Result<Patterns> {
    let count = checked_count(alphabet.size(), window.len(), cap)?;
    Ok(Patterns { window, alphabet_size: alphabet.size(), next: 0, count })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Background {
    Constant(Symbol),
    /// Value at site `i` is `word[i mod word.len()]`.
    Periodic(Vec<Symbol>),
}

impl Background {
    pub fn at(&self, i: i64) -> Symbol {
        match self {
            Background::Constant(s) => *s,
            Background::Periodic(w) => w[i.rem_euclid(w.len() as i64) as usize],
        }
    }

    pub fn period(&self) -> usize {
        match self {
            Background::Constant(_) => 1,
            Background::Periodic(w) => w.len(),
        }
    }

    /// Reduce a periodic word to its primitive root; period one becomes constant.
    fn canonical(self) -> Self {
        match self {
            Background::Periodic(w) => {
                let n = w.len();
                let p = (1..=n).find(|&p| n % p == 0 && (p..n).all(|i| w[i] == w[i - p])).unwrap_or(n);
                if p == 1 {
                    Background::Constant(w[0])
                } else {
                    Background::Periodic(w[..p].to_vec())
                }
            }
            c => c,
        }
    }

    /// Background `b` with `b(i) = self(i + k)`.
    fn shifted(&self, k: i64) -> Self {
        match self {
            Background::Constant(s) => Background::Constant(*s),
            Background::Periodic(w) => {
                let p = w.len() as i64;
                Background::Periodic((0..p).map(|j| w[(j + k).rem_euclid(p) as usize]).collect())
            }
        }
    }

    /// One period of values starting at `site`.
    pub fn period_from(&self, site: i64) -> Vec<Symbol> {
        (0..self.period() as i64).map(|j| self.at(site + j)).collect()
    }
}

/// Bound of a replacement interval; `None` on the left means `-inf`, on the
/// right `+inf`.
pub type Bound = Option<i64>;

/// Two-sided configuration: left background below `split`, right background
/// from `split` on, and a finite overlay of sites that differ from the
/// background there.
#[derive(Debug, Clone)]
pub struct Config {
    left: Background,
    right: Background,
    split: i64,
    overlay: BTreeMap<i64, Symbol>,
}

impl Config {
    pub fn constant(s: Symbol) -> Self {
        Config { left: Background::Constant(s), right: Background::Constant(s), split: 0, overlay: BTreeMap::new() }
    }

    pub fn periodic(word: Vec<Symbol>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidInput("periodic background needs a non-empty word".into()));
        }
        let bg = Background::Periodic(word).canonical();
        Ok(Config { left: bg.clone(), right: bg, split: 0, overlay: BTreeMap::new() })
    }

    pub fn from_background(bg: Background) -> Self {
        let bg = bg.canonical();
        Config { left: bg.clone(), right: bg, split: 0, overlay: BTreeMap::new() }
    }

    /// Left background on sites `< split`, right background on sites `>= split`.
    pub fn half_lines(left: Background, right: Background, split: i64) -> Self {
        Config { left: left.canonical(), right: right.canonical(), split, overlay: BTreeMap::new() }.normalized()
    }

    /// Constant background `bg` with the pattern written on its window.
    pub fn from_pattern(bg: Symbol, p: &Pattern) -> Self {
        Config::constant(bg).with_pattern(p)
    }

    pub fn left(&self) -> &Background {
        &self.left
    }

    pub fn right(&self) -> &Background {
        &self.right
    }

    fn two_sided(&self) -> bool {
        self.left != self.right
    }

    fn background_at(&self, i: i64) -> Symbol {
        if i < self.split {
            self.left.at(i)
        } else {
            self.right.at(i)
        }
    }

    fn normalized(mut self) -> Self {
        if !self.two_sided() {
            // relocating the split does not change the point when both sides agree
            self.split = 0;
        }
        let (left, right, split) = (&self.left, &self.right, self.split);
        self.overlay.retain(|&i, s| {
            let bg = if i < split { left.at(i) } else { right.at(i) };
            *s != bg
        });
        self
    }

    pub fn get(&self, i: i64) -> Symbol {
        match self.overlay.get(&i) {
            Some(&s) => s,
            None => self.background_at(i),
        }
    }

    pub fn with(&self, i: i64, s: Symbol) -> Config {
        let mut c = self.clone();
        if s == c.background_at(i) {
            c.overlay.remove(&i);
        } else {
            c.overlay.insert(i, s);
        }
        c
    }

    pub fn with_pattern(&self, p: &Pattern) -> Config {
        let mut c = self.clone();
        for (i, &s) in p.window().sites().zip(p.letters()) {
            if s == c.background_at(i) {
                c.overlay.remove(&i);
            } else {
                c.overlay.insert(i, s);
            }
        }
        c
    }

    /// Letters on `w`.
    pub fn pattern(&self, w: Window) -> Pattern {
        Pattern { window: w, letters: w.sites().map(|i| self.get(i)).collect() }
    }

    /// Sites where the point may differ from a single-background description:
    /// the overlay together with the two sites straddling the split.
    pub fn extent(&self) -> Option<(i64, i64)> {
        let mut lo = self.overlay.keys().next().copied();
        let mut hi = self.overlay.keys().next_back().copied();
        if self.two_sided() {
            lo = Some(lo.map_or(self.split - 1, |l| l.min(self.split - 1)));
            hi = Some(hi.map_or(self.split, |h| h.max(self.split)));
        }
        lo.zip(hi)
    }

    pub fn overlay(&self) -> impl Iterator<Item = (i64, Symbol)> + '_ {
        self.overlay.iter().map(|(&i, &s)| (i, s))
    }

    /// The configuration `i -> self(i + k)`.
    pub fn shift(&self, k: i64) -> Config {
        Config {
            left: self.left.shifted(k),
            right: self.right.shifted(k),
            split: self.split - k,
            overlay: self.overlay.iter().map(|(&i, &s)| (i - k, s)).collect(),
        }
    }

    /// Set every site of `[lo, hi]` to `a`; an empty interval is a no-op.
    pub fn theta_replace(&self, lo: Bound, hi: Bound, a: Symbol) -> Config {
        match (lo, hi) {
            (Some(l), Some(h)) if l > h => self.clone(),
            (Some(l), Some(h)) => {
                let mut c = self.clone();
                for i in l..=h {
                    if a == c.background_at(i) {
                        c.overlay.remove(&i);
                    } else {
                        c.overlay.insert(i, a);
                    }
                }
                c
            }
            (None, None) => Config::constant(a),
            (None, Some(h)) => {
                let split = h + 1;
                let top = self.extent().map_or(split, |(_, e)| e.max(split));
                let mut c = Config {
                    left: Background::Constant(a),
                    right: self.right.clone(),
                    split,
                    overlay: BTreeMap::new(),
                };
                for i in split..=top {
                    c.overlay.insert(i, self.get(i));
                }
                c.normalized()
            }
            (Some(l), None) => {
                let bottom = self.extent().map_or(l - 1, |(e, _)| e.min(l - 1));
                let mut c = Config {
                    left: self.left.clone(),
                    right: Background::Constant(a),
                    split: l,
                    overlay: BTreeMap::new(),
                };
                for i in bottom..l {
                    c.overlay.insert(i, self.get(i));
                }
                c.normalized()
            }
        }
    }

    /// Sites where `self` and `other` differ, ascending. Fails when the
    /// difference set is infinite.
    pub fn diff_sites(&self, other: &Config) -> Result<Vec<i64>> {
        if self.left != other.left || self.right != other.right {
            return Err(Error::BackgroundMismatch);
        }
        let span = match (self.extent(), other.extent()) {
            (None, None) => return Ok(Vec::new()),
            (Some(a), None) | (None, Some(a)) => a,
            (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
        };
        Ok((span.0..=span.1).filter(|&i| self.get(i) != other.get(i)).collect())
    }
}

impl PartialEq for Config {
    fn eq(&self, other: &Self) -> bool {
        matches!(self.diff_sites(other), Ok(d) if d.is_empty())
    }
}

impl Eq for Config {}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bg = |b: &Background| match b {
            Background::Constant(s) => format!("{s}"),
            Background::Periodic(w) => {
                format!("({})", w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(""))
            }
        };
        match self.extent() {
            None => write!(f, "..{}..", bg(&self.left)),
            Some((lo, hi)) => {
                write!(f, "..{}|{lo}:", bg(&self.left))?;
                for i in lo..=hi {
                    write!(f, "{}", self.get(i))?;
                }
                write!(f, "|{}..", bg(&self.right))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(c: &Config, w: Window) -> Vec<Symbol> {
        w.sites().map(|i| c.get(i)).collect()
    }

    #[test]
    fn counting_and_budget() {
        let e2 = Alphabet::numbered(2).unwrap();
        let e3 = Alphabet::numbered(3).unwrap();
        assert_eq!(enumerate_patterns(&e2, Window::new(0, 1).unwrap(), DEFAULT_BUDGET).unwrap().count(), 4);
        assert_eq!(enumerate_patterns(&e3, Window::new(0, 2).unwrap(), DEFAULT_BUDGET).unwrap().count(), 27);
        let err = enumerate_patterns(&e2, Window::new(0, 30).unwrap(), DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { requested, cap } if requested == 1u128 << 31 && cap == 1 << 24));
    }

    #[test]
    fn patterns_are_lexicographic_and_distinct() {
        let e3 = Alphabet::numbered(3).unwrap();
        let w = Window::new(-1, 1).unwrap();
        let ps: Vec<_> = enumerate_patterns(&e3, w, 100).unwrap().collect();
        for pair in ps.windows(2) {
            assert!(pair[0].letters() < pair[1].letters());
        }
        for (i, p) in ps.iter().enumerate() {
            assert_eq!(p.index(3), i);
        }
    }

    #[test]
    fn shift_matches_array_model() {
        let c = Config::constant(0).with(0, 1);
        let s = c.shift(1);
        assert_eq!(s.get(-1), 1);
        let w = Window::new(-10, 10).unwrap();
        let base = naive(&c, Window::new(-9, 11).unwrap());
        assert_eq!(naive(&s, w), base);
        assert_eq!(c.shift(0), c);
        assert_eq!(c.shift(3).shift(-3), c);
    }

    #[test]
    fn periodic_backgrounds_are_canonical() {
        let a = Config::periodic(vec![0, 1, 0, 1]).unwrap();
        let b = Config::periodic(vec![0, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(Config::periodic(vec![1, 1]).unwrap(), Config::constant(1));
        let s = b.shift(1);
        assert_eq!(s.get(0), 1);
        assert_eq!(s.shift(1), b);
    }

    #[test]
    fn theta_empty_interval_is_identity() {
        let c = Config::constant(0).with(2, 1).with(-3, 1);
        assert_eq!(c.theta_replace(Some(1), Some(-1), 0), c);
        let all_a = Config::constant(1);
        assert_eq!(all_a.theta_replace(Some(-5), Some(5), 1), all_a);
    }

    #[test]
    fn theta_half_lines() {
        let c = Config::constant(1).with(-2, 0).with(0, 0).with(3, 0);
        let left = c.theta_replace(None, Some(-1), 2);
        assert_eq!(naive(&left, Window::new(-6, 5).unwrap()), vec![2, 2, 2, 2, 2, 2, 0, 1, 1, 0, 1, 1]);
        assert_eq!(left.get(-1000), 2);
        assert_eq!(left.get(1000), 1);
        let right = c.theta_replace(Some(1), None, 2);
        assert_eq!(naive(&right, Window::new(-3, 2).unwrap()), vec![1, 0, 1, 0, 2, 2]);
        assert_eq!(c.theta_replace(None, None, 0), Config::constant(0));
        // replacing with the background letter collapses the split
        assert_eq!(c.theta_replace(None, Some(-1), 1), Config::constant(1).with(0, 0).with(3, 0));
    }

    #[test]
    fn diff_sites_and_background_mismatch() {
        let a = Config::constant(0).with(1, 1).with(4, 1);
        let b = Config::constant(0).with(4, 1).with(-2, 1);
        assert_eq!(a.diff_sites(&b).unwrap(), vec![-2, 1]);
        let c = Config::constant(1);
        assert_eq!(a.diff_sites(&c), Err(Error::BackgroundMismatch));
        // same half-line backgrounds with different splits differ finitely
        let h1 = Config::half_lines(Background::Constant(0), Background::Constant(1), 0);
        let h2 = Config::half_lines(Background::Constant(0), Background::Constant(1), 3);
        assert_eq!(h1.diff_sites(&h2).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn spin_alphabet() {
        assert_eq!(Alphabet::spins().spin_values().unwrap(), vec![-1.0, 1.0]);
        assert!(Alphabet::numbered(2).unwrap().spin_values().is_err());
        assert!(Alphabet::new(vec!["a".into(), "a".into()], 0).is_err());
        assert!(Alphabet::new(vec!["a".into()], 0).is_err());
    }

    #[test]
    fn sub_windows_cover_all_intervals() {
        let w = Window::new(0, 3).unwrap();
        assert_eq!(w.sub_windows().len(), 10);
    }
}
