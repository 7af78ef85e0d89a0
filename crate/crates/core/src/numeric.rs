//! Small numerical kernels: log-domain reductions and power-law tail sums.

/// `log(sum(exp(x)))` without overflow. Returns `-inf` on an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// Value with a rigorous absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub error: f64,
}

impl Bounded {
    pub const ZERO: Bounded = Bounded { value: 0.0, error: 0.0 };

    pub fn exact(value: f64) -> Self {
        Bounded { value, error: 0.0 }
    }

    pub fn scale(self, c: f64) -> Self {
        Bounded { value: self.value * c, error: self.error * c.abs() }
    }
}

impl std::ops::Add for Bounded {
    type Output = Bounded;
    fn add(self, rhs: Bounded) -> Bounded {
        Bounded { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

impl std::ops::Sub for Bounded {
    type Output = Bounded;
    fn sub(self, rhs: Bounded) -> Bounded {
        Bounded { value: self.value - rhs.value, error: self.error + rhs.error }
    }
}

impl std::iter::Sum for Bounded {
    fn sum<I: Iterator<Item = Bounded>>(iter: I) -> Bounded {
        iter.fold(Bounded::ZERO, |a, b| a + b)
    }
}

// B_2, B_4, ..., B_20
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta `sum_{k>=0} (q+k)^{-s}` for real `s > 1`, `q > 0`, via
/// Euler-Maclaurin summation. The error bound is twice the first omitted
/// correction term plus accumulated rounding.
pub fn hurwitz_zeta(s: f64, q: f64) -> Bounded {
    assert!(s > 1.0 && q > 0.0, "hurwitz_zeta requires s > 1 and q > 0");
    const SHIFT_TO: f64 = 12.0;
    const TERMS: usize = 8;
    let n = if q < SHIFT_TO { (SHIFT_TO - q).ceil() as usize } else { 0 };
    let mut head = 0.0;
    for k in 0..n {
        head += (q + k as f64).powf(-s);
    }
    let a = q + n as f64;
    let a_pow = a.powf(-s);
    let mut tail = a * a_pow / (s - 1.0) + 0.5 * a_pow;
    // rising factorial s(s+1)...(s+2j-2) / (2j)!, times a^{-s-2j+1}
    let mut factor = s / 2.0; // j = 1: s / 2!
    let mut power = a_pow / a;
    let mut last = 0.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b * factor * power;
        if j == TERMS {
            last = term;
            break;
        }
        tail += term;
        let jj = (j + 1) as f64;
        // advance to j+1: multiply by (s+2j-1)(s+2j) / ((2j+1)(2j+2))
        factor *= (s + 2.0 * jj - 1.0) * (s + 2.0 * jj) / ((2.0 * jj + 1.0) * (2.0 * jj + 2.0));
        power /= a * a;
    }
    let value = head + tail;
    let rounding = value.abs() * f64::EPSILON * (n as f64 + 16.0);
    Bounded { value, error: 2.0 * last.abs() + rounding }
}

/// Riemann zeta for real `s > 1`.
pub fn zeta(s: f64) -> Bounded {
    hurwitz_zeta(s, 1.0)
}

/// `sum_{n >= start} w[(n - start) mod p] * n^{-alpha}` for `alpha > 1`,
/// `start >= 1`, where `p = weights.len()`.
pub fn periodic_power_tail(alpha: f64, start: u64, weights: &[f64]) -> Bounded {
    assert!(start >= 1 && !weights.is_empty());
    let p = weights.len() as f64;
    let scale = p.powf(-alpha);
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(r, &w)| hurwitz_zeta(alpha, (start as f64 + r as f64) / p).scale(w * scale))
        .sum()
}

/// `sum_{n >= start} n^{-alpha}`.
pub fn power_tail(alpha: f64, start: u64) -> Bounded {
    periodic_power_tail(alpha, start, &[1.0])
}
