//! Upper half-plane geometry and fundamental-domain reduction.
//!
//! The fundamental domain used throughout is
//! `F = { 0 <= Re z <= 1, |z| >= 1, |z - 1| >= 1 }`, and the compact core
//! is the image of `F ∩ { Im z <= T0 }`. A point is "in the core" when its
//! reduction into `F` has ordinate at most `T0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scatterset::{canonical_representative, Rational, UnimodularMatrix};

/// Boundary tolerance for membership in `F`.
pub const REDUCTION_EPS: f64 = 1e-9;

/// Step cap for [`reduce_to_f`].
pub const REDUCTION_CAP: usize = 10_000;

/// A point of the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HPoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> HPoint<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !(y > T::zero()) || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "({x}, {y}) is not in the upper half-plane"
            )));
        }
        Ok(HPoint { x, y })
    }

    pub fn abs_sq(&self) -> T {
        self.x * self.x + self.y * self.y
    }

    /// `|z - 1|^2`.
    pub fn abs_sq_minus_one(&self) -> T {
        let dx = self.x - T::one();
        dx * dx + self.y * self.y
    }

    /// Whether the point lies in `F` up to the tolerance `eps`.
    pub fn in_fundamental_domain(&self, eps: T) -> bool {
        let r = (T::one() - eps) * (T::one() - eps);
        self.x >= -eps && self.x <= T::one() + eps && self.abs_sq() >= r && self.abs_sq_minus_one() >= r
    }
}

pub fn mobius_apply<T: Real>(g: &UnimodularMatrix, z: HPoint<T>) -> HPoint<T> {
    let [a, b, c, d] = g.entries().map(T::from_i64_lossy);
    // (az + b)/(cz + d) = (az + b)(c conj(z) + d) / |cz + d|^2
    let den_re = c * z.x + d;
    let den_im = c * z.y;
    let den = den_re * den_re + den_im * den_im;
    let num_re = a * z.x + b;
    let num_im = a * z.y;
    HPoint {
        x: (num_re * den_re + num_im * den_im) / den,
        y: (num_im * den_re - num_re * den_im) / den,
    }
}

pub fn hyperbolic_distance<T: Real>(z1: HPoint<T>, z2: HPoint<T>) -> T {
    if z1.x == z2.x {
        return (z2.y / z1.y).ln().abs();
    }
    let dx = z1.x - z2.x;
    let dy = z1.y - z2.y;
    let chord = (dx * dx + dy * dy).sqrt();
    T::lit(2.0) * (chord / (T::lit(2.0) * (z1.y * z2.y).sqrt())).asinh()
}

/// A point reduced into `F` with the matrix that maps the original onto it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedPoint<T> {
    pub z: HPoint<T>,
    pub g: UnimodularMatrix,
}

pub fn reduce_to_f<T: Real>(z: HPoint<T>) -> Result<ReducedPoint<T>> {
    reduce_to_f_with(z, T::lit(REDUCTION_EPS), REDUCTION_CAP)
}

/// Reduction by translations, `z -> -1/z`, and `z -> (z - 2)/(z - 1)`.
///
/// Each inversion is only applied strictly inside its circle, where it
/// raises the ordinate.
pub fn reduce_to_f_with<T: Real>(z: HPoint<T>, eps: T, cap: usize) -> Result<ReducedPoint<T>> {
    let one = T::one();
    let r = (one - eps) * (one - eps);
    let half = T::lit(0.5);
    let mut w = z;
    let mut g = UnimodularMatrix::IDENTITY;
    let overflow = || Error::ReductionCap {
        point: format!("({}, {})", z.x, z.y),
        cap,
    };
    for _ in 0..cap {
        if w.x < -eps || w.x > one + eps {
            let n = w.x.floor();
            let shift = UnimodularMatrix::translation(-n.to_i64().ok_or_else(&overflow)?);
            w.x = w.x - n;
            g = shift.checked_mul(&g).ok_or_else(&overflow)?;
            continue;
        }
        let step = if w.x <= half {
            (w.abs_sq() < r).then_some(UnimodularMatrix::INVERSION)
        } else {
            (w.abs_sq_minus_one() < r).then_some(UnimodularMatrix::RIGHT_INVERSION)
        };
        match step {
            Some(m) => {
                w = mobius_apply(&m, w);
                g = m.checked_mul(&g).ok_or_else(&overflow)?;
            }
            None => return Ok(ReducedPoint { z: w, g }),
        }
    }
    Err(overflow())
}

/// One sample of a traced geodesic lift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceSample<T> {
    pub t: T,
    pub lift: HPoint<T>,
    pub reduced: HPoint<T>,
    pub in_core: bool,
}

/// CSV row layout for trace export.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub x_lift: f64,
    pub y_lift: f64,
    pub x_reduced: f64,
    pub y_reduced: f64,
    pub in_core: bool,
}

/// Sampled descent of the vertical geodesic from `∞` to `w = p/q`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicTrace<T> {
    pub w: Rational,
    pub q: u64,
    pub t0: T,
    pub step: T,
    pub samples: Vec<TraceSample<T>>,
    pub measured_sojourn: T,
}

impl<T: Real> GeodesicTrace<T> {
    /// `2 ln(q T0)`.
    pub fn predicted_sojourn(&self) -> T {
        T::lit(2.0) * (T::from_u64_lossy(self.q) * self.t0).ln()
    }

    pub fn gap(&self) -> T {
        (self.measured_sojourn - self.predicted_sojourn()).abs()
    }

    /// Number of maximal runs of consecutive in-core samples.
    pub fn in_core_runs(&self) -> usize {
        let mut runs = 0;
        let mut prev = false;
        for s in &self.samples {
            if s.in_core && !prev {
                runs += 1;
            }
            prev = s.in_core;
        }
        runs
    }

    pub fn rows(&self) -> impl Iterator<Item = TraceRow> + '_ {
        self.samples.iter().map(|s| TraceRow {
            t: s.t.to_f64_lossy(),
            x_lift: s.lift.x.to_f64_lossy(),
            y_lift: s.lift.y.to_f64_lossy(),
            x_reduced: s.reduced.x.to_f64_lossy(),
            y_reduced: s.reduced.y.to_f64_lossy(),
            in_core: s.in_core,
        })
    }
}

/// Default multiplicative margin below the exit ordinate `1/(T0 q^2)`.
pub const DEFAULT_TAIL_FACTOR: f64 = 10.0;

/// Traces the lift on `Re z = p/q` from `Im z = 2 T0` down to
/// `1/(tail_factor T0 q^2)` at unit speed `t = ln(2 T0 / y)`, reducing every
/// sample into `F`. The measured sojourn is the elapsed time between the
/// first and last in-core samples.
pub fn trace_sojourn<T: Real>(w: Rational, t0: T, step: T, tail_factor: T) -> Result<GeodesicTrace<T>> {
    if !(t0 > T::one()) || !t0.is_finite() {
        return Err(Error::CoreHeight(t0.to_f64_lossy()));
    }
    if !(step > T::zero() && step <= T::lit(0.01)) {
        return Err(Error::Precondition(format!("step must lie in (0, 0.01], got {step}")));
    }
    if !(tail_factor >= T::lit(4.0)) || !tail_factor.is_finite() {
        return Err(Error::Precondition(format!(
            "tail factor must be at least 4, got {tail_factor}"
        )));
    }
    let g = canonical_representative(w)?;
    if g.w() != w {
        return Err(Error::Precondition(format!("{w} is not an element of G")));
    }
    let q = g.q;
    let x = T::from_u64_lossy(g.p) / T::from_u64_lossy(q);
    let q_t = T::from_u64_lossy(q);
    let y_start = T::lit(2.0) * t0;
    let y_end = T::one() / (tail_factor * t0 * q_t * q_t);
    let t_end = (y_start / y_end).ln();
    let n = (t_end / step).floor().to_usize().unwrap_or(0);

    let mut samples = Vec::with_capacity(n + 1);
    let mut first = None;
    let mut last = None;
    for k in 0..=n {
        let t = T::from_usize(k).expect("sample index") * step;
        let lift = HPoint {
            x,
            y: y_start * (-t).exp(),
        };
        let reduced = reduce_to_f(lift)?.z;
        let in_core = reduced.y <= t0;
        if in_core {
            first.get_or_insert(t);
            last = Some(t);
        }
        samples.push(TraceSample {
            t,
            lift,
            reduced,
            in_core,
        });
    }
    let measured_sojourn = match (first, last) {
        (Some(a), Some(b)) => b - a,
        _ => T::zero(),
    };
    Ok(GeodesicTrace {
        w,
        q,
        t0,
        step,
        samples,
        measured_sojourn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(x: f64, y: f64) -> HPoint<f64> {
        HPoint::new(x, y).unwrap()
    }

    #[test]
    fn mobius_examples() {
        let z = p(0.3, 1.7);
        assert_eq!(mobius_apply(&UnimodularMatrix::IDENTITY, z), z);
        let i = mobius_apply(&UnimodularMatrix::INVERSION, p(0.0, 1.0));
        assert_abs_diff_eq!(i.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(i.y, 1.0, epsilon = 1e-15);
        let h = mobius_apply(&UnimodularMatrix::INVERSION, p(0.0, 2.0));
        assert_abs_diff_eq!(h.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.y, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mobius_in_f32() {
        let h = mobius_apply(&UnimodularMatrix::INVERSION, HPoint::new(0.0f32, 2.0).unwrap());
        assert!((h.y - 0.5).abs() < 1e-6);
    }

    #[test]
    fn distance_examples() {
        assert_abs_diff_eq!(
            hyperbolic_distance(p(0.2, 0.5), p(0.2, 3.0)),
            6f64.ln(),
            epsilon = 1e-15
        );
        assert_eq!(hyperbolic_distance(p(0.2, 0.5), p(0.2, 0.5)), 0.0);
        assert_abs_diff_eq!(
            hyperbolic_distance(p(0.0, 1.0), p(0.0, 2.0)),
            2f64.ln(),
            epsilon = 1e-15
        );
        // general formula against arccosh form
        let (a, b) = (p(0.1, 0.4), p(1.3, 2.2));
        let d = 1.0 + ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)) / (2.0 * a.y * b.y);
        assert_abs_diff_eq!(hyperbolic_distance(a, b), d.acosh(), epsilon = 1e-12);
    }

    #[test]
    fn half_plane_rejects_bad_points() {
        assert!(HPoint::new(0.0, 0.0).is_err());
        assert!(HPoint::new(0.0, -1.0).is_err());
        assert!(HPoint::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn reduction_examples() {
        let r = reduce_to_f(p(0.5, 2.0)).unwrap();
        assert_eq!(r.z, p(0.5, 2.0));
        assert_eq!(r.g, UnimodularMatrix::IDENTITY);

        let r = reduce_to_f(p(0.5, 0.1)).unwrap();
        assert!(r.z.y >= 3f64.sqrt() / 2.0 - 1e-9);
        assert!(r.z.in_fundamental_domain(1e-9));

        let r = reduce_to_f(p(2.3, 5.0)).unwrap();
        assert_abs_diff_eq!(r.z.x, 0.3, epsilon = 1e-12);
        assert_eq!(r.z.y, 5.0);
        assert_eq!(r.g, UnimodularMatrix::translation(-2));
    }

    #[test]
    fn reduction_matrix_reproduces_point() {
        for &(x, y) in &[(0.13, 0.002), (-3.7, 0.05), (0.77, 0.31), (12.5, 0.0007)] {
            let z = p(x, y);
            let r = reduce_to_f(z).unwrap();
            let back = mobius_apply(&r.g, z);
            assert_abs_diff_eq!(back.x, r.z.x, epsilon = 1e-9);
            assert_abs_diff_eq!(back.y, r.z.y, epsilon = 1e-9);
            assert!(r.z.in_fundamental_domain(1e-9));
        }
    }

    #[test]
    fn reduction_cap_reports() {
        let err = reduce_to_f_with(p(0.3, 1e-6), 1e-9, 2).unwrap_err();
        assert!(matches!(err, Error::ReductionCap { cap: 2, .. }));
    }

    #[test]
    fn trace_examples() {
        for (w, t0, expected) in [
            (Rational::new(0, 1), 2.0, 2f64.ln() * 2.0),
            (Rational::new(1, 2), 2.0, 4f64.ln() * 2.0),
            (Rational::new(2, 5), 3.0, 15f64.ln() * 2.0),
        ] {
            let tr = trace_sojourn(w, t0, 0.001, DEFAULT_TAIL_FACTOR).unwrap();
            assert!(
                (tr.measured_sojourn - expected).abs() <= 0.003,
                "{w}: {}",
                tr.measured_sojourn
            );
            assert_abs_diff_eq!(tr.predicted_sojourn(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn trace_preconditions() {
        let w = Rational::new(2, 5);
        assert!(matches!(trace_sojourn(w, 1.0, 0.001, 10.0), Err(Error::CoreHeight(_))));
        assert!(trace_sojourn(w, 2.0, 0.1, 10.0).is_err());
        assert!(trace_sojourn(w, 2.0, 0.001, 2.0).is_err());
        assert!(trace_sojourn(Rational::new(4, 5), 2.0, 0.001, 10.0).is_err());
    }

    #[test]
    fn trace_shape() {
        let tr = trace_sojourn(Rational::new(0, 1), 2.0, 0.005, 10.0).unwrap();
        assert_eq!(tr.in_core_runs(), 1);
        assert!(tr.samples.windows(2).all(|s| s[1].t > s[0].t));
        let first_in = tr.samples.iter().position(|s| s.in_core).unwrap();
        assert!(tr.samples[..first_in].iter().all(|s| s.lift.y > 2.0));
        assert_eq!(tr.rows().count(), tr.samples.len());
    }
}
