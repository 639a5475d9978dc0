//! Three evaluations of `F(s) = sum_{n in O} 2^omega(n) / n^s` for real `s > 1`:
//! the Dirichlet series itself, its Euler product over primes `p = 1 (mod 4)`,
//! and the closed form `zeta(s) L(s, chi) / ((1 + 2^-s) zeta(2s))`, where
//! `chi` is the non-principal character mod 4. Also the residue constant
//! `C = 4 L(1, chi) / pi^2 = 1/pi` of `F` at `s = 1`.

use serde::Serialize;

use crate::counting::{sieve_primes, sieve_tables, CountTable};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lowest `s` accepted by the truncated series and product.
pub const S_FLOOR: f64 = 1.5;

/// Minimum truncation for [`f_direct`] and [`f_euler`].
pub const MIN_TRUNCATION: u64 = 1000;

/// Terms used by the accelerated alternating sums.
pub const ALTERNATING_TERMS: usize = 64;

/// Terms summed explicitly before the Euler-Maclaurin tail of `zeta`.
pub const ZETA_TERMS: u64 = 1000;

/// A truncated series or product with an estimate of what was left out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue<T> {
    pub s: T,
    pub value: T,
    pub terms_used: u64,
    pub tail_bound: T,
}

fn check_s<T: Real>(s: T, floor: f64) -> Result<()> {
    if !(s >= T::lit(floor)) || !s.is_finite() {
        return Err(Error::OutOfRange {
            value: s.to_string(),
            range: format!("s >= {floor}"),
        });
    }
    Ok(())
}

fn check_truncation(n: u64) -> Result<()> {
    if n < MIN_TRUNCATION {
        return Err(Error::OutOfRange {
            value: n.to_string(),
            range: format!("truncation >= {MIN_TRUNCATION}"),
        });
    }
    Ok(())
}

/// Bound on `sum_{n > N} d(n) / n^s`, which dominates the tail of `F` since
/// `2^omega(n) <= d(n)`. Uses `sum_{n <= x} d(n) <= x (ln x + 1)` and
/// partial summation.
pub fn divisor_tail_bound<T: Real>(s: T, n: u64) -> T {
    let nn = T::from_u64_lossy(n);
    let sm1 = s - T::one();
    s * nn.powf(-sm1) * ((nn.ln() + T::one()) / sm1 + T::one() / (sm1 * sm1))
}

pub fn f_direct<T: Real>(s: T, n_max: u64) -> Result<SeriesValue<T>> {
    check_truncation(n_max)?;
    check_s(s, S_FLOOR)?;
    f_direct_with_table(s, &sieve_tables(n_max)?)
}

/// [`f_direct`] over an existing table, truncated at the table limit.
pub fn f_direct_with_table<T: Real>(s: T, table: &CountTable) -> Result<SeriesValue<T>> {
    check_s(s, S_FLOOR)?;
    let n_max = table.limit();
    let coeffs = table.s_values();
    // odd n: s_n = 2^omega(n) on O and 0 elsewhere. Sum small terms first.
    let mut value = T::zero();
    let mut n = if n_max % 2 == 1 { n_max } else { n_max - 1 };
    loop {
        let c = coeffs[n as usize];
        if c != 0 {
            value = value + T::from_u64_lossy(c as u64) * T::from_u64_lossy(n).powf(-s);
        }
        if n == 1 {
            break;
        }
        n -= 2;
    }
    Ok(SeriesValue {
        s,
        value,
        terms_used: n_max,
        tail_bound: divisor_tail_bound(s, n_max),
    })
}

/// Partial Euler product over primes `p = 1 (mod 4)`, `p <= p_max`.
pub fn f_euler<T: Real>(s: T, p_max: u64) -> Result<SeriesValue<T>> {
    check_s(s, S_FLOOR)?;
    let primes = if p_max < 5 { Vec::new() } else { sieve_primes(p_max) };
    let mut value = T::one();
    let mut used = 0u64;
    for &p in primes.iter().filter(|&&p| p % 4 == 1) {
        let u = T::from_u64_lossy(p).powf(-s);
        value = value * (T::one() + u) / (T::one() - u);
        used += 1;
    }
    // log of the missing factors is at most sum_{n > P} 3 n^-s <= 3 P^(1-s)/(s-1)
    let tail_bound = if p_max < MIN_TRUNCATION {
        T::infinity()
    } else {
        let pp = T::from_u64_lossy(p_max);
        let log_tail = T::lit(3.0) * pp.powf(T::one() - s) / (s - T::one());
        value * log_tail.exp_m1()
    };
    Ok(SeriesValue {
        s,
        value,
        terms_used: used,
        tail_bound,
    })
}

/// Sum of `sum_k (-1)^k a(k)` by repeated pairwise averaging of the partial
/// sums. The returned bound is the change from dropping the last term.
pub fn alternating_sum<T: Real>(a: impl Fn(usize) -> T, n: usize) -> (T, T) {
    let averaged = |len: usize| {
        let mut partial = Vec::with_capacity(len + 1);
        let mut acc = T::zero();
        for k in 0..=len {
            let term = a(k);
            acc = if k % 2 == 0 { acc + term } else { acc - term };
            partial.push(acc);
        }
        while partial.len() > 1 {
            for i in 0..partial.len() - 1 {
                partial[i] = (partial[i] + partial[i + 1]) * T::lit(0.5);
            }
            partial.pop();
        }
        partial[0]
    };
    let full = averaged(n);
    let shorter = averaged(n.saturating_sub(1));
    (full, (full - shorter).abs())
}

/// `L(s, chi) = 1 - 3^-s + 5^-s - ...`, valid for `s >= 1`.
pub fn dirichlet_l<T: Real>(s: T) -> SeriesValue<T> {
    let (value, tail_bound) = alternating_sum(
        |k| T::from_usize(2 * k + 1).expect("odd index").powf(-s),
        ALTERNATING_TERMS,
    );
    SeriesValue {
        s,
        value,
        terms_used: ALTERNATING_TERMS as u64 + 1,
        tail_bound,
    }
}

/// `zeta(s)` for `s > 1`: `n_terms` explicit terms plus an Euler-Maclaurin
/// tail through the `B_4` term; the bound is the size of the `B_6` term.
pub fn zeta<T: Real>(s: T, n_terms: u64) -> SeriesValue<T> {
    let n = T::from_u64_lossy(n_terms);
    let mut head = T::zero();
    for k in (1..n_terms).rev() {
        head = head + T::from_u64_lossy(k).powf(-s);
    }
    let ns = n.powf(-s);
    let s1 = s + T::one();
    let s2 = s + T::lit(2.0);
    let s3 = s + T::lit(3.0);
    let s4 = s + T::lit(4.0);
    let tail = n * ns / (s - T::one()) + ns * T::lit(0.5) + s * ns / n / T::lit(12.0)
        - s * s1 * s2 * ns / (n * n * n) / T::lit(720.0);
    let b6 = s * s1 * s2 * s3 * s4 * ns / n.powi(5) / T::lit(30240.0);
    SeriesValue {
        s,
        value: head + tail,
        terms_used: n_terms,
        tail_bound: b6.abs(),
    }
}

/// `zeta(s) L(s, chi) / ((1 + 2^-s) zeta(2s))`.
pub fn f_closed<T: Real>(s: T, n_terms: u64) -> Result<SeriesValue<T>> {
    if !(s > T::one()) || !s.is_finite() {
        return Err(Error::OutOfRange {
            value: s.to_string(),
            range: "s > 1".into(),
        });
    }
    check_truncation(n_terms)?;
    let z = zeta(s, n_terms);
    let z2 = zeta(s + s, n_terms);
    let l = dirichlet_l(s);
    let two = T::one() + T::lit(2.0).powf(-s);
    let value = z.value * l.value / (two * z2.value);
    // first-order propagation of the component errors
    let rel = z.tail_bound / z.value + z2.tail_bound / z2.value + l.tail_bound / l.value;
    Ok(SeriesValue {
        s,
        value,
        terms_used: n_terms,
        tail_bound: value * rel,
    })
}

/// `C = 4 L(1, chi) / pi^2`, which equals `1/pi`.
pub fn residue_constant<T: Real>() -> T {
    let l1 = dirichlet_l(T::one()).value;
    T::lit(4.0) * l1 / (T::PI() * T::PI())
}

/// One row of the three-way comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FComparison {
    pub s: f64,
    pub f_direct: f64,
    pub f_euler: f64,
    pub f_closed: f64,
    pub max_pairwise_gap: f64,
}

impl FComparison {
    pub fn new(direct: SeriesValue<f64>, euler: SeriesValue<f64>, closed: SeriesValue<f64>) -> Self {
        let (a, b, c) = (direct.value, euler.value, closed.value);
        FComparison {
            s: direct.s,
            f_direct: a,
            f_euler: b,
            f_closed: c,
            max_pairwise_gap: (a - b).abs().max((b - c).abs()).max((a - c).abs()),
        }
    }
}

/// Evaluates all three routes at each `s`, sharing one coefficient table.
pub fn compare_routes(s_values: &[f64], truncation: u64) -> Result<Vec<FComparison>> {
    check_truncation(truncation)?;
    let table = sieve_tables(truncation)?;
    s_values
        .iter()
        .map(|&s| {
            Ok(FComparison::new(
                f_direct_with_table(s, &table)?,
                f_euler(s, truncation)?,
                f_closed(s, ZETA_TERMS)?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    // Catalan's constant, from the literature value 0.915965594177219015...
    const CATALAN: f64 = 0.915_965_594_177_219;

    #[test]
    fn l_at_one_and_two() {
        assert_abs_diff_eq!(dirichlet_l(1.0).value, PI / 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dirichlet_l(2.0).value, CATALAN, epsilon = 1e-14);
    }

    #[test]
    fn zeta_known_values() {
        assert_abs_diff_eq!(zeta(2.0, ZETA_TERMS).value, PI * PI / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(zeta(4.0, ZETA_TERMS).value, PI.powi(4) / 90.0, epsilon = 1e-14);
        assert!(zeta(2.0, ZETA_TERMS).tail_bound < 1e-15);
    }

    #[test]
    fn closed_form_at_two() {
        // zeta(2) L(2) / ((5/4) zeta(4)) = 12 G / pi^2
        let f = f_closed(2.0, ZETA_TERMS).unwrap();
        assert_abs_diff_eq!(f.value, 12.0 * CATALAN / (PI * PI), epsilon = 1e-13);
        assert_abs_diff_eq!(f.value, 1.113_680_618_132_32, epsilon = 1e-12);
    }

    #[test]
    fn direct_at_two() {
        let f = f_direct(2.0, 1_000_000).unwrap();
        assert_abs_diff_eq!(f.value, 12.0 * CATALAN / (PI * PI), epsilon = 1e-5);
        assert!(f.tail_bound > 0.0 && f.tail_bound < 1e-4);
        assert!((f.value - 1.113_680_618_132_32).abs() <= f.tail_bound);
    }

    #[test]
    fn large_s_tends_to_one() {
        assert_abs_diff_eq!(f_direct(40.0, 1000).unwrap().value, 1.0, epsilon = 1e-27);
        assert_abs_diff_eq!(f_euler(40.0, 1000).unwrap().value, 1.0, epsilon = 1e-27);
    }

    #[test]
    fn euler_leading_factor() {
        let f = f_euler(4.0, 1000).unwrap();
        let u = 5f64.powi(-4);
        let five = (1.0 + u) / (1.0 - u);
        assert!(f.value > five);
        assert_abs_diff_eq!(f.value, 1.0 + 2.0 * u, epsilon = 2.5e-4);
        assert_eq!(f_euler(4.0, 4).unwrap().value, 1.0);
        assert_eq!(f_euler(4.0, 4).unwrap().terms_used, 0);
    }

    #[test]
    fn routes_agree_at_three() {
        let c = f_closed(3.0f64, ZETA_TERMS).unwrap();
        let d = f_direct(3.0, 100_000).unwrap();
        assert!(c.value > 0.0);
        assert!((c.value - d.value).abs() <= d.tail_bound + c.tail_bound);
        assert!(d.value <= c.value);
    }

    #[test]
    fn residue_is_one_over_pi() {
        let c: f64 = residue_constant();
        assert_abs_diff_eq!(c, 1.0 / PI, epsilon = 1e-8);
        assert_abs_diff_eq!(c * PI, 1.0, epsilon = 1e-7);
        let c32: f32 = residue_constant();
        assert!((c32 - std::f32::consts::FRAC_1_PI).abs() < 1e-5);
    }

    #[test]
    fn preconditions() {
        assert!(f_direct(1.2, 10_000).is_err());
        assert!(f_direct(2.0, 10).is_err());
        assert!(f_euler(1.0, 10_000).is_err());
        assert!(f_closed(1.0, ZETA_TERMS).is_err());
    }
}
