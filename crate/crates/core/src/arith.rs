//! Exact integer arithmetic for the congruence `x^2 = -1 (mod q)`.
//!
//! Values are 64-bit; products go through 128-bit intermediates. The
//! number of solutions `s_q` is evaluated from the prime factorization:
//!
//! - `s_q = 0` when `4 | q` or a prime `= 3 (mod 4)` divides `q`,
//! - `s_q = 2^omega(q)` when every prime factor of `q` is `= 1 (mod 4)`,
//! - `s_q = 2^omega(q/2)` when `q/2` has that form,
//!
//! with the convention `s_1 = 1`. [`brute_force_s`] is the exhaustive
//! oracle the closed form is tested against.

use num_integer::Integer;

use crate::error::{Error, Result};

/// Largest modulus accepted by the factorization routines.
pub const MAX_MODULUS: u64 = (1 << 63) - 1;

const TRIAL_DIVISION_BOUND: u64 = 1_000_000;

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let e = (a as i128 % m as i128).extended_gcd(&(m as i128));
    (e.gcd == 1).then(|| e.x.rem_euclid(m as i128) as u64)
}

/// Deterministic Miller-Rabin; the base set is exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// Brent's variant of Pollard rho. `n` must be odd and composite.
fn pollard_rho(n: u64) -> u64 {
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut q = 1u64;
        let mut r = 1u64;
        let mut ys = 2u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..(128.min(r - k)) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += 128;
            }
            r <<= 1;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!("pollard rho exhausted its increments")
}

fn split_into(n: u64, primes: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        primes.push(n);
        return;
    }
    let d = pollard_rho(n);
    split_into(d, primes);
    split_into(n / d, primes);
}

/// Prime-power decomposition of a positive integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `(prime, exponent)` pairs with strictly increasing primes.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn exponent_of(&self, p: u64) -> u32 {
        self.factors.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, e)| e)
    }

    /// Euler's totient.
    pub fn phi(&self) -> u64 {
        self.factors.iter().map(|&(p, e)| (p - 1) * p.pow(e - 1)).product()
    }
}

pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 || n > MAX_MODULUS {
        return Err(Error::OutOfRange {
            value: n.to_string(),
            range: format!("[1, {MAX_MODULUS}]"),
        });
    }
    let mut factors = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p <= TRIAL_DIVISION_BOUND && p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        let mut rest = Vec::new();
        split_into(m, &mut rest);
        rest.sort_unstable();
        for q in rest {
            match factors.last_mut() {
                Some((last, e)) if *last == q => *e += 1,
                _ => factors.push((q, 1)),
            }
        }
    }
    Ok(Factorization { n, factors })
}

/// Which branch of the `s_q` trichotomy a modulus falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QClass {
    /// `4 | q` or some prime `= 3 (mod 4)` divides `q`.
    Vanishing,
    /// Every prime factor is `= 1 (mod 4)` (includes `q = 1`).
    OddO { omega: u32 },
    /// `q = 2m` with `m` odd and every prime factor of `m` `= 1 (mod 4)`.
    TwiceO { omega: u32 },
}

impl QClass {
    pub fn omega(&self) -> Option<u32> {
        match *self {
            QClass::Vanishing => None,
            QClass::OddO { omega } | QClass::TwiceO { omega } => Some(omega),
        }
    }

    pub fn is_vanishing(&self) -> bool {
        matches!(self, QClass::Vanishing)
    }
}

pub fn classify(f: &Factorization) -> QClass {
    let mut even = false;
    let mut omega = 0;
    for &(p, e) in f.factors() {
        if p == 2 {
            if e >= 2 {
                return QClass::Vanishing;
            }
            even = true;
        } else if p % 4 == 3 {
            return QClass::Vanishing;
        } else {
            omega += 1;
        }
    }
    if even {
        QClass::TwiceO { omega }
    } else {
        QClass::OddO { omega }
    }
}

/// `s_q` for a class, with `s_1 = 1` falling out of `OddO { omega: 0 }`.
pub fn s_of_class(class: QClass) -> u64 {
    match class.omega() {
        None => 0,
        Some(w) => 1 << w,
    }
}

/// Number of residues `1 <= p < q` with `p^2 = -1 (mod q)`; `s_1 = 1`.
pub fn s_of_q(q: u64) -> Result<u64> {
    Ok(s_of_class(classify(&factorize(q)?)))
}

/// The solution set of `p^2 = -1 (mod q)` in `[1, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqWitness {
    pub q: u64,
    pub solutions: Vec<u64>,
}

impl SqWitness {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

/// Exhaustive scan over `[1, q)`. For `q = 1` the list is empty even though
/// `s_1` is defined as 1.
pub fn brute_force_s(q: u64) -> Result<SqWitness> {
    if q == 0 {
        return Err(Error::OutOfRange {
            value: "0".into(),
            range: "[1, 2^63)".into(),
        });
    }
    let solutions = (1..q).filter(|&p| (mul_mod(p, p, q) + 1).is_multiple_of(q)).collect();
    Ok(SqWitness { q, solutions })
}

/// The two square roots of -1 modulo a prime `p = 1 (mod 4)`, smaller first.
pub fn sqrt_minus_one_mod_prime(p: u64) -> Result<(u64, u64)> {
    if p % 4 != 1 || !is_prime(p) {
        return Err(Error::NotOneModFour(p));
    }
    // smallest quadratic non-residue by Euler's criterion
    let a = (2..p)
        .find(|&a| pow_mod(a, (p - 1) / 2, p) == p - 1)
        .expect("a prime has a non-residue");
    let x = pow_mod(a, (p - 1) / 4, p);
    assert_eq!(mul_mod(x, x, p), p - 1, "sqrt(-1) mod {p} failed to verify");
    Ok((x.min(p - x), x.max(p - x)))
}

/// Lifts a root of `x^2 = -1 (mod p^j)` to one modulo `p^(j+1)`.
///
/// With `x1 = x0 + p^j y0`, the unique `y0 in [0, p)` solves
/// `2 x0 y0 = -(x0^2 + 1) / p^j (mod p)`.
pub fn hensel_lift(x0: u64, p: u64, j: u32) -> Result<u64> {
    if p % 4 != 1 {
        return Err(Error::NotOneModFour(p));
    }
    if j == 0 {
        return Err(Error::InvalidArgument("lifting exponent must be at least 1".into()));
    }
    let overflow = || Error::OutOfRange {
        value: format!("{p}^{}", j + 1),
        range: "u64".into(),
    };
    let m = p.checked_pow(j).ok_or_else(overflow)?;
    m.checked_mul(p).ok_or_else(overflow)?;
    let x0 = x0 % m;
    let sq = x0 as u128 * x0 as u128 + 1;
    if !sq.is_multiple_of(m as u128) {
        return Err(Error::NotARoot { x0, modulus: m });
    }
    let v = ((sq / m as u128) % p as u128) as u64;
    let inv = inv_mod(mul_mod(2, x0, p), p).ok_or(Error::NotCoprime { p: 2 * x0, q: p })?;
    let y0 = (p - mul_mod(v, inv, p)) % p;
    Ok(x0 + m * y0)
}

/// Square roots of -1 modulo the prime power `p^e`, smaller first.
fn prime_power_roots(p: u64, e: u32) -> Result<(u64, u64)> {
    let (mut x, _) = sqrt_minus_one_mod_prime(p)?;
    for j in 1..e {
        x = hensel_lift(x, p, j)?;
    }
    let m = p.pow(e);
    Ok((x.min(m - x), x.max(m - x)))
}

// x = a1 (mod m1), x = a2 (mod m2), gcd(m1, m2) = 1.
fn crt_pair(a1: u64, m1: u64, a2: u64, m2: u64) -> (u64, u64) {
    let inv = inv_mod(m1 % m2, m2).expect("coprime moduli");
    let diff = (a2 + m2 - a1 % m2) % m2;
    let t = mul_mod(diff, inv, m2);
    let m = m1 * m2;
    ((a1 as u128 + m1 as u128 * t as u128) as u64 % m, m)
}

/// All solutions of `p^2 = -1 (mod q)` assembled by the Chinese remainder
/// theorem from prime-power roots. Output is sorted.
pub fn crt_solutions(f: &Factorization) -> Result<SqWitness> {
    let q = f.n();
    if classify(f).is_vanishing() {
        return Err(Error::Vanishing(q));
    }
    if q == 1 {
        return Ok(SqWitness {
            q,
            solutions: Vec::new(),
        });
    }
    // Each component offers its residue choices; the even component has one.
    let mut components: Vec<(u64, Vec<u64>)> = Vec::with_capacity(f.factors().len());
    for &(p, e) in f.factors() {
        if p == 2 {
            components.push((2, vec![1]));
        } else {
            let (lo, hi) = prime_power_roots(p, e)?;
            components.push((p.pow(e), vec![lo, hi]));
        }
    }
    let total: usize = components.iter().map(|(_, c)| c.len()).product();
    let mut solutions = Vec::with_capacity(total);
    // Lexicographic over choices, first component most significant.
    for index in 0..total {
        let mut rem = index;
        let mut acc = (0u64, 1u64);
        for (m, choices) in components.iter().rev() {
            let pick = choices[rem % choices.len()];
            rem /= choices.len();
            acc = crt_pair(acc.0, acc.1, pick, *m);
        }
        solutions.push(acc.0);
    }
    solutions.sort_unstable();
    Ok(SqWitness { q, solutions })
}
