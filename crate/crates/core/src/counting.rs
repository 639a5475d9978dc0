//! Sieved counting functions and their asymptotic main terms.
//!
//! - `S(x) = sum_{q <= x} s_q`, with main term `3x / (2 pi)`
//! - `tau(x) = sum_{n <= x, n in O} 2^omega(n)`, main term `x / pi`
//! - `Psi(x) = sum_{q <= x} n_q`, `n_q = (phi(q) + s_q) / 2`, main term `3x^2 / (2 pi^2)`
//! - `Pi(Y) = Psi(sqrt(Y) / T0)`, main term `3Y / (2 pi^2 T0^2)`
//!
//! Sums over `q <= x` for real `x` run over `q <= floor(x)`.

use std::fmt;
use std::str::FromStr;

use num_integer::Roots;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scatterset::GStream;

/// Default cap on the memory a [`CountTable`] may occupy.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

/// Prefix counts of `S` and `tau` are stored as `u32`; this keeps them exact.
pub const MAX_TABLE_LIMIT: u64 = 1 << 32;

const BYTES_PER_ENTRY: u64 = 4 + 2 + 4 + 4 + 8 + 4;

/// Relative slack for `sojourn <= ln Y`; equality is attained exactly at
/// `Y = (q T0)^2`, where the two sides agree only up to rounding.
pub const SOJOURN_SLACK: f64 = 1e-12;

/// Per-`q` arithmetic data and prefix sums for `1 <= q <= limit`.
///
/// Arrays are indexed by `q`, with a zero entry at index 0.
#[derive(Clone, Debug)]
pub struct CountTable {
    limit: u64,
    phi: Vec<u32>,
    sq: Vec<u16>,
    prefix_s: Vec<u32>,
    prefix_tau: Vec<u32>,
    prefix_psi: Vec<u64>,
}

pub fn sieve_tables(x_max: u64) -> Result<CountTable> {
    sieve_tables_with_budget(x_max, DEFAULT_MEMORY_BUDGET)
}

/// Linear sieve over smallest prime factors, deriving `phi` and `s_q` from
/// `q = p * m` with `p` the smallest prime of `q`.
pub fn sieve_tables_with_budget(x_max: u64, budget_bytes: u64) -> Result<CountTable> {
    if x_max == 0 {
        return Err(Error::OutOfRange {
            value: "0".into(),
            range: "x_max >= 1".into(),
        });
    }
    let requested = (x_max + 1).saturating_mul(BYTES_PER_ENTRY);
    if requested > budget_bytes || x_max >= MAX_TABLE_LIMIT {
        return Err(Error::MemoryBudget {
            requested: x_max,
            budget_bytes,
        });
    }
    let n = x_max as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    let mut phi = vec![0u32; n + 1];
    let mut sq = vec![0u16; n + 1];
    phi[1] = 1;
    sq[1] = 1;
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let p = spf[i] as usize;
        let m = i / p;
        if m.is_multiple_of(p) {
            phi[i] = phi[m] * p as u32;
            sq[i] = if p == 2 { 0 } else { sq[m] };
        } else {
            phi[i] = phi[m] * (p as u32 - 1);
            sq[i] = match p % 4 {
                1 => 2 * sq[m],
                2 => sq[m],
                _ => 0,
            };
        }
        for &r in &primes {
            let r = r as usize;
            if r > p || i * r > n {
                break;
            }
            spf[i * r] = r as u32;
        }
    }
    drop(spf);

    let mut prefix_s = vec![0u32; n + 1];
    let mut prefix_tau = vec![0u32; n + 1];
    let mut prefix_psi = vec![0u64; n + 1];
    for q in 1..=n {
        let s = sq[q] as u32;
        prefix_s[q] = prefix_s[q - 1] + s;
        prefix_tau[q] = prefix_tau[q - 1] + if q % 2 == 1 { s } else { 0 };
        prefix_psi[q] = prefix_psi[q - 1] + (phi[q] as u64 + s as u64) / 2;
    }
    Ok(CountTable {
        limit: x_max,
        phi,
        sq,
        prefix_s,
        prefix_tau,
        prefix_psi,
    })
}

fn floor_arg(x: f64) -> Result<u64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::OutOfRange {
            value: x.to_string(),
            range: "x >= 0".into(),
        });
    }
    Ok(x.floor() as u64)
}

impl CountTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn check(&self, x: u64) -> Result<usize> {
        if x > self.limit {
            return Err(Error::OutOfRange {
                value: x.to_string(),
                range: format!("[0, {}] (table limit)", self.limit),
            });
        }
        Ok(x as usize)
    }

    pub fn phi(&self, q: u64) -> Result<u64> {
        Ok(self.phi[self.check(q)?] as u64)
    }

    pub fn s(&self, q: u64) -> Result<u64> {
        Ok(self.sq[self.check(q)?] as u64)
    }

    /// `n_q = |G_q|`.
    pub fn n(&self, q: u64) -> Result<u64> {
        let i = self.check(q)?;
        Ok((self.phi[i] as u64 + self.sq[i] as u64) / 2)
    }

    pub fn s_sum(&self, x: u64) -> Result<u64> {
        Ok(self.prefix_s[self.check(x)?] as u64)
    }

    pub fn tau_at(&self, x: u64) -> Result<u64> {
        Ok(self.prefix_tau[self.check(x)?] as u64)
    }

    pub fn psi(&self, x: u64) -> Result<u64> {
        Ok(self.prefix_psi[self.check(x)?])
    }

    /// `S(x)` for real `x`.
    pub fn s_sum_real(&self, x: f64) -> Result<u64> {
        self.s_sum(floor_arg(x)?)
    }

    /// `tau(x)` for real `x`.
    pub fn tau(&self, x: f64) -> Result<u64> {
        self.tau_at(floor_arg(x)?)
    }

    pub fn psi_real(&self, x: f64) -> Result<u64> {
        self.psi(floor_arg(x)?)
    }

    pub fn phi_values(&self) -> &[u32] {
        &self.phi
    }

    pub fn s_values(&self) -> &[u16] {
        &self.sq
    }
}

/// Largest `q >= 0` with `(q T0)^2 <= Y`.
///
/// Integer-valued `Y` and `T0` take an exact integer square-root path.
pub fn max_denominator(y: f64, t0: f64) -> Result<u64> {
    if !(t0 > 1.0) || !t0.is_finite() {
        return Err(Error::CoreHeight(t0));
    }
    if !y.is_finite() || y < 0.0 {
        return Err(Error::OutOfRange {
            value: y.to_string(),
            range: "Y >= 0".into(),
        });
    }
    const EXACT: f64 = (1u64 << 53) as f64;
    if y.fract() == 0.0 && t0.fract() == 0.0 && y < EXACT && t0 < EXACT {
        return Ok((y as u64).sqrt() / t0 as u64);
    }
    let fits = |q: u64| {
        let v = q as f64 * t0;
        v * v <= y
    };
    let mut q = (y.sqrt() / t0).floor() as u64;
    while q > 0 && !fits(q) {
        q -= 1;
    }
    while fits(q + 1) {
        q += 1;
    }
    Ok(q)
}

/// Number of scattering geodesics with `e^sojourn <= Y`, i.e. `Psi(sqrt(Y)/T0)`.
pub fn pi_count(y: f64, t0: f64, table: &CountTable) -> Result<u64> {
    table.psi(max_denominator(y, t0)?)
}

/// `Pi(Y)` by walking `G` in order and keeping elements with
/// `2 ln(q T0) <= ln Y`. Independent of the sieve.
pub fn pi_count_by_enumeration(y: f64, t0: f64) -> Result<u64> {
    if !(t0 > 1.0) {
        return Err(Error::CoreHeight(t0));
    }
    if !(y > 0.0) {
        return Ok(0);
    }
    let threshold = y.ln();
    let slack = SOJOURN_SLACK * threshold.abs().max(1.0);
    let mut count = 0u64;
    for g in GStream::new() {
        let sojourn: f64 = g.sojourn(t0)?;
        if sojourn > threshold + slack {
            // sojourn grows with q and the stream is ordered by q
            break;
        }
        count += 1;
    }
    Ok(count)
}

/// Explicit bounds `2 floor(sqrt(x-1)) - 1 <= S(x) <= (2/3)(x+1)^(3/2)`.
pub fn check_s_bounds(x: f64, table: &CountTable) -> Result<bool> {
    if !(x >= 5.0) {
        return Err(Error::OutOfRange {
            value: x.to_string(),
            range: "x >= 5".into(),
        });
    }
    let s = table.s_sum_real(x)? as f64;
    let (lower, upper) = s_bounds(x);
    Ok(lower <= s && s <= upper)
}

/// The two explicit bounds on `S(x)`.
pub fn s_bounds(x: f64) -> (f64, f64) {
    // floor(sqrt(x - 1)) = isqrt(floor(x) - 1)
    let r = (x.floor() as u64 - 1).sqrt() as f64;
    (2.0 * r - 1.0, (2.0 / 3.0) * (x + 1.0).powf(1.5))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CountKind {
    #[serde(rename = "S")]
    S,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "psi")]
    Psi,
    #[serde(rename = "pi")]
    Pi,
}

impl CountKind {
    pub const ALL: [CountKind; 4] = [CountKind::S, CountKind::Tau, CountKind::Psi, CountKind::Pi];

    /// Main term of the asymptotic law at `x` (or `Y`).
    pub fn main_term(&self, x: f64, t0: Option<f64>) -> Result<f64> {
        use std::f64::consts::PI;
        Ok(match self {
            CountKind::S => 3.0 * x / (2.0 * PI),
            CountKind::Tau => x / PI,
            CountKind::Psi => 3.0 * x * x / (2.0 * PI * PI),
            CountKind::Pi => {
                let t0 = t0.ok_or_else(|| Error::InvalidArgument("Pi requires T0".into()))?;
                if !(t0 > 1.0) {
                    return Err(Error::CoreHeight(t0));
                }
                3.0 * x / (2.0 * PI * PI * t0 * t0)
            }
        })
    }
}

impl fmt::Display for CountKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountKind::S => "S",
            CountKind::Tau => "tau",
            CountKind::Psi => "psi",
            CountKind::Pi => "pi",
        })
    }
}

impl FromStr for CountKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s" => Ok(CountKind::S),
            "tau" => Ok(CountKind::Tau),
            "psi" => Ok(CountKind::Psi),
            "pi" => Ok(CountKind::Pi),
            other => Err(Error::InvalidArgument(format!("unknown count kind {other:?}"))),
        }
    }
}

/// An exact count next to its predicted main term.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub kind: CountKind,
    pub x: f64,
    pub exact: u64,
    pub predicted: f64,
    pub ratio: f64,
    pub abs_error: f64,
}

impl AsymptoticReport {
    pub fn new(kind: CountKind, x: f64, exact: u64, predicted: f64) -> Self {
        AsymptoticReport {
            kind,
            x,
            exact,
            predicted,
            ratio: exact as f64 / predicted,
            abs_error: (exact as f64 - predicted).abs(),
        }
    }

    /// `|ratio - 1|`.
    pub fn relative_error(&self) -> f64 {
        (self.ratio - 1.0).abs()
    }
}

pub fn asymptotic_report(kind: CountKind, x: f64, t0: Option<f64>, table: &CountTable) -> Result<AsymptoticReport> {
    let exact = match kind {
        CountKind::S => table.s_sum_real(x)?,
        CountKind::Tau => table.tau(x)?,
        CountKind::Psi => table.psi_real(x)?,
        CountKind::Pi => {
            let t0 = t0.ok_or_else(|| Error::InvalidArgument("Pi requires T0".into()))?;
            pi_count(x, t0, table)?
        }
    };
    Ok(AsymptoticReport::new(kind, x, exact, kind.main_term(x, t0)?))
}

/// Cumulative sums at one checkpoint, produced by [`segmented_sums`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CheckpointSums {
    pub x: u64,
    pub s: u64,
    pub tau: u64,
    pub phi: u64,
    pub psi: u64,
}

#[derive(Default, Clone, Copy)]
struct SegmentTotals {
    s: u64,
    tau: u64,
    phi: u64,
    psi: u64,
}

/// `S`, `tau`, `sum phi` and `Psi` at each checkpoint, using a segmented
/// sieve whose memory is independent of the largest checkpoint.
///
/// Segments are processed in parallel on the current rayon pool.
pub fn segmented_sums(checkpoints: &[u64], segment_len: usize) -> Result<Vec<CheckpointSums>> {
    let mut cps: Vec<u64> = checkpoints.to_vec();
    cps.sort_unstable();
    cps.dedup();
    let Some(&x_max) = cps.last() else {
        return Ok(Vec::new());
    };
    if segment_len == 0 {
        return Err(Error::InvalidArgument("segment length must be positive".into()));
    }
    let base = sieve_primes(x_max.sqrt() + 1);
    let seg = segment_len as u64;
    let n_segments = x_max / seg + 1;

    // Each segment [lo, hi) reports its totals split at the checkpoints it contains.
    let pieces: Vec<Vec<(u64, SegmentTotals)>> = (0..n_segments)
        .into_par_iter()
        .map(|k| {
            let lo = (k * seg).max(1);
            let hi = ((k + 1) * seg).min(x_max + 1);
            segment_pieces(lo, hi, &base, &cps)
        })
        .collect();

    let mut running = SegmentTotals::default();
    let mut out = Vec::with_capacity(cps.len());
    for (end, t) in pieces.into_iter().flatten() {
        running.s += t.s;
        running.tau += t.tau;
        running.phi += t.phi;
        running.psi += t.psi;
        if cps.binary_search(&end).is_ok() {
            out.push(CheckpointSums {
                x: end,
                s: running.s,
                tau: running.tau,
                phi: running.phi,
                psi: running.psi,
            });
        }
    }
    if cps[0] == 0 {
        out.insert(
            0,
            CheckpointSums {
                x: 0,
                s: 0,
                tau: 0,
                phi: 0,
                psi: 0,
            },
        );
    }
    Ok(out)
}

pub(crate) fn sieve_primes(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

// Totals over [lo, hi), cut after every checkpoint inside the range; the last
// piece ends at hi - 1.
fn segment_pieces(lo: u64, hi: u64, primes: &[u64], cps: &[u64]) -> Vec<(u64, SegmentTotals)> {
    if lo >= hi {
        return Vec::new();
    }
    let len = (hi - lo) as usize;
    let mut rest: Vec<u64> = (lo..hi).collect();
    let mut phi: Vec<u64> = rest.clone();
    let mut s = vec![1u64; len];
    for &p in primes {
        if p * p > hi - 1 {
            break;
        }
        let start = lo.div_ceil(p) * p;
        let mut m = start;
        while m < hi {
            let i = (m - lo) as usize;
            let mut e = 0;
            while rest[i].is_multiple_of(p) {
                rest[i] /= p;
                e += 1;
            }
            phi[i] = phi[i] / p * (p - 1);
            s[i] = match (p % 4, e) {
                (2, 1) => s[i],
                (1, _) => 2 * s[i],
                _ => 0,
            };
            m += p;
        }
    }
    let mut pieces = Vec::new();
    let mut acc = SegmentTotals::default();
    for i in 0..len {
        let q = lo + i as u64;
        // leftover cofactor is a single prime above sqrt(q)
        let r = rest[i];
        if r > 1 {
            phi[i] = phi[i] / r * (r - 1);
            s[i] = match r % 4 {
                1 => 2 * s[i],
                2 => s[i],
                _ => 0,
            };
        }
        acc.s += s[i];
        if q % 2 == 1 {
            acc.tau += s[i];
        }
        acc.phi += phi[i];
        acc.psi += (phi[i] + s[i]) / 2;
        if cps.binary_search(&q).is_ok() || q == hi - 1 {
            pieces.push((q, acc));
            acc = SegmentTotals::default();
        }
    }
    pieces
}
