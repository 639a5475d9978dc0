//! Scattering sets `G_q` and the globally ordered set `G`.
//!
//! For `q >= 2` the coprime residues `I_q` split into the self-paired set
//! `S_q` (`p^2 = -1 mod q`) and pairs `{p1, p2}` with `p1 p2 = -1 mod q`.
//! `G_q` keeps every self-paired residue and the smaller member of each
//! pair, as fractions `p/q`; `G_1 = {0}`. Elements of `G` correspond one to
//! one with scattering geodesics of the modular surface, the one for `p/q`
//! having sojourn time `2 ln(q T0)`.

use std::collections::VecDeque;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::Serialize;

use crate::arith::inv_mod;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Rational = Ratio<i64>;

/// A point of `Q ∪ {∞}` with exact 128-bit arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtRational {
    Finite(Ratio<i128>),
    Infinity,
}

impl From<Rational> for ExtRational {
    fn from(r: Rational) -> Self {
        ExtRational::Finite(Ratio::new(*r.numer() as i128, *r.denom() as i128))
    }
}

/// Integer matrix of determinant 1, taken up to sign.
///
/// Stored normalized: `c > 0`, or `c = 0` and `a > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct UnimodularMatrix {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl UnimodularMatrix {
    pub const IDENTITY: Self = UnimodularMatrix { a: 1, b: 0, c: 0, d: 1 };
    /// `z -> -1/z`.
    pub const INVERSION: Self = UnimodularMatrix {
        a: 0,
        b: -1,
        c: 1,
        d: 0,
    };
    /// `z -> (z - 2)/(z - 1)`, inversion in the circle `|z - 1| = 1`.
    pub const RIGHT_INVERSION: Self = UnimodularMatrix {
        a: 1,
        b: -2,
        c: 1,
        d: -1,
    };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(Error::InvalidArgument(format!(
                "matrix ({a}, {b}; {c}, {d}) has determinant {det}"
            )));
        }
        Ok(Self::normalized(a, b, c, d))
    }

    fn normalized(a: i64, b: i64, c: i64, d: i64) -> Self {
        if c < 0 || (c == 0 && a < 0) {
            UnimodularMatrix {
                a: -a,
                b: -b,
                c: -c,
                d: -d,
            }
        } else {
            UnimodularMatrix { a, b, c, d }
        }
    }

    pub fn translation(n: i64) -> Self {
        UnimodularMatrix { a: 1, b: n, c: 0, d: 1 }
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> i128 {
        self.a as i128 * self.d as i128 - self.b as i128 * self.c as i128
    }

    /// `self * rhs`, i.e. apply `rhs` first. `None` on overflow.
    pub fn checked_mul(&self, rhs: &Self) -> Option<Self> {
        let m = |x: i64, y: i64, z: i64, w: i64| x.checked_mul(y)?.checked_add(z.checked_mul(w)?);
        Some(Self::normalized(
            m(self.a, rhs.a, self.b, rhs.c)?,
            m(self.a, rhs.b, self.b, rhs.d)?,
            m(self.c, rhs.a, self.d, rhs.c)?,
            m(self.c, rhs.b, self.d, rhs.d)?,
        ))
    }

    pub fn inverse(&self) -> Self {
        Self::normalized(self.d, -self.b, -self.c, self.a)
    }

    /// Fractional-linear action on `Q ∪ {∞}`.
    pub fn apply(&self, z: ExtRational) -> ExtRational {
        let (a, b, c, d) = (self.a as i128, self.b as i128, self.c as i128, self.d as i128);
        match z {
            ExtRational::Infinity if c == 0 => ExtRational::Infinity,
            ExtRational::Infinity => ExtRational::Finite(Ratio::new(a, c)),
            ExtRational::Finite(r) => {
                let (n, m) = (*r.numer(), *r.denom());
                let den = c * n + d * m;
                if den == 0 {
                    ExtRational::Infinity
                } else {
                    ExtRational::Finite(Ratio::new(a * n + b * m, den))
                }
            }
        }
    }
}

impl fmt::Display for UnimodularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}; {}, {})", self.a, self.b, self.c, self.d)
    }
}

/// How a member of `G_q` arose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberClass {
    SelfPaired,
    PairMin,
}

impl fmt::Display for MemberClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemberClass::SelfPaired => "self_paired",
            MemberClass::PairMin => "pair_min",
        })
    }
}

/// An element `p/q` of `G`, identifying one scattering geodesic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScatteringGeodesicId {
    pub p: u64,
    pub q: u64,
    pub class: MemberClass,
}

impl ScatteringGeodesicId {
    pub fn w(&self) -> Rational {
        Rational::new(self.p as i64, self.q as i64)
    }

    pub fn sojourn<T: Real>(&self, t0: T) -> Result<T> {
        sojourn_for_denominator(self.q, t0)
    }

    pub fn as_f64(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn record(&self, t0: f64) -> Result<GeodesicRecord> {
        Ok(GeodesicRecord {
            q: self.q,
            p: self.p,
            sojourn: self.sojourn(t0)?,
            class: self.class,
        })
    }
}

impl fmt::Display for ScatteringGeodesicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p == 0 {
            f.write_str("0")
        } else {
            write!(f, "{}/{}", self.p, self.q)
        }
    }
}

/// Flat output record for one element of `G`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicRecord {
    pub q: u64,
    pub p: u64,
    pub sojourn: f64,
    pub class: MemberClass,
}

/// `G_q` together with the decomposition it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GqSet {
    pub q: u64,
    /// `S_q`, sorted.
    pub self_paired: Vec<u64>,
    /// Pairs of `C_q` with `p1 < p2`, sorted by `p1`.
    pub pairs: Vec<(u64, u64)>,
    members: Vec<ScatteringGeodesicId>,
}

impl GqSet {
    /// Members sorted by increasing `p/q`.
    pub fn members(&self) -> &[ScatteringGeodesicId] {
        &self.members
    }

    pub fn fractions(&self) -> Vec<Rational> {
        self.members.iter().map(ScatteringGeodesicId::w).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn records(&self, t0: f64) -> Result<Vec<GeodesicRecord>> {
        self.members.iter().map(|m| m.record(t0)).collect()
    }
}

/// The unique `y` in `I_q` with `p y = -1 (mod q)`.
pub fn pair_of(p: u64, q: u64) -> Result<u64> {
    if q < 2 || p == 0 || p >= q {
        return Err(Error::OutOfRange {
            value: format!("{p} mod {q}"),
            range: "1 <= p < q, q >= 2".into(),
        });
    }
    let inv = inv_mod(p, q).ok_or(Error::NotCoprime { p, q })?;
    Ok(q - inv)
}

pub fn build_gq(q: u64) -> Result<GqSet> {
    if q == 0 {
        return Err(Error::OutOfRange {
            value: "0".into(),
            range: "q >= 1".into(),
        });
    }
    if q == 1 {
        return Ok(GqSet {
            q,
            self_paired: Vec::new(),
            pairs: Vec::new(),
            members: vec![ScatteringGeodesicId {
                p: 0,
                q: 1,
                class: MemberClass::SelfPaired,
            }],
        });
    }
    let mut self_paired = Vec::new();
    let mut pairs = Vec::new();
    let mut members = Vec::new();
    for p in (1..q).filter(|p| p.gcd(&q) == 1) {
        let y = pair_of(p, q)?;
        if y == p {
            self_paired.push(p);
            members.push(ScatteringGeodesicId {
                p,
                q,
                class: MemberClass::SelfPaired,
            });
        } else if p < y {
            pairs.push((p, y));
            members.push(ScatteringGeodesicId {
                p,
                q,
                class: MemberClass::PairMin,
            });
        }
    }
    Ok(GqSet {
        q,
        self_paired,
        pairs,
        members,
    })
}

/// Unbounded stream over `G`: blocks of increasing `q`, increasing `p/q`
/// within a block. Blocks are built on demand.
#[derive(Clone, Debug)]
pub struct GStream {
    next_q: u64,
    block: VecDeque<ScatteringGeodesicId>,
}

impl GStream {
    pub fn new() -> Self {
        GStream {
            next_q: 1,
            block: VecDeque::new(),
        }
    }
}

impl Default for GStream {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for GStream {
    type Item = ScatteringGeodesicId;

    fn next(&mut self) -> Option<Self::Item> {
        while self.block.is_empty() {
            let gq = build_gq(self.next_q).ok()?;
            self.next_q += 1;
            self.block.extend(gq.members);
        }
        self.block.pop_front()
    }
}

/// The first `limit` elements of `G`.
pub fn iterate_g(limit: usize) -> std::iter::Take<GStream> {
    GStream::new().take(limit)
}

/// Total order on `G`: by denominator, then by value.
pub fn g_order(x: &ScatteringGeodesicId, y: &ScatteringGeodesicId) -> std::cmp::Ordering {
    x.q.cmp(&y.q).then_with(|| x.p.cmp(&y.p))
}

fn require_reduced_open_unit(w: Rational) -> Result<(i64, i64)> {
    let (p, q) = (*w.numer(), *w.denom());
    if q < 2 || p <= 0 || p >= q || p.gcd(&q) != 1 {
        return Err(Error::NotReduced { numer: p, denom: q });
    }
    Ok((p, q))
}

/// Decides whether the vertical geodesics ending at `w1` and `w2` project to
/// the same geodesic on the modular surface.
///
/// Returns `σ = (p2, b; q, -p1)` with `b = -(1 + p1 p2)/q`, which sends
/// `w1 -> ∞` and `∞ -> w2`, or the identity when `w1 = w2`.
pub fn equivalent(w1: Rational, w2: Rational) -> Result<Option<UnimodularMatrix>> {
    let (p1, q1) = require_reduced_open_unit(w1)?;
    let (p2, q2) = require_reduced_open_unit(w2)?;
    if w1 == w2 {
        return Ok(Some(UnimodularMatrix::IDENTITY));
    }
    if q1 != q2 {
        return Ok(None);
    }
    let q = q1 as i128;
    let num = 1 + p1 as i128 * p2 as i128;
    if num % q != 0 {
        return Ok(None);
    }
    let b = i64::try_from(-num / q).map_err(|_| Error::OutOfRange {
        value: format!("{w1}, {w2}"),
        range: "witness entries within i64".into(),
    })?;
    UnimodularMatrix::new(p2, b, q1, -p1).map(Some)
}

fn sojourn_for_denominator<T: Real>(q: u64, t0: T) -> Result<T> {
    if !(t0 > T::one()) {
        return Err(Error::CoreHeight(t0.to_f64_lossy()));
    }
    Ok(T::lit(2.0) * (T::from_u64_lossy(q) * t0).ln())
}

/// Sojourn time `2 ln(q T0)` of the scattering geodesic attached to `w ∈ G`.
pub fn sojourn_time<T: Real>(w: Rational, t0: T) -> Result<T> {
    let canonical = canonical_representative(w)?;
    if canonical.w() != w {
        return Err(Error::Precondition(format!("{w} is not an element of G")));
    }
    sojourn_for_denominator(canonical.q, t0)
}

/// The element of `G` naming the same scattering geodesic as `w ∈ [0, 1)`.
pub fn canonical_representative(w: Rational) -> Result<ScatteringGeodesicId> {
    let (p, q) = (*w.numer(), *w.denom());
    if p == 0 && q == 1 {
        return Ok(ScatteringGeodesicId {
            p: 0,
            q: 1,
            class: MemberClass::SelfPaired,
        });
    }
    let (p, q) = require_reduced_open_unit(w).map(|(p, q)| (p as u64, q as u64))?;
    let y = pair_of(p, q)?;
    let (p, class) = match y.cmp(&p) {
        std::cmp::Ordering::Equal => (p, MemberClass::SelfPaired),
        std::cmp::Ordering::Greater => (p, MemberClass::PairMin),
        std::cmp::Ordering::Less => (y, MemberClass::PairMin),
    };
    Ok(ScatteringGeodesicId { p, q, class })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn pair_of_examples() {
        assert_eq!(pair_of(1, 5).unwrap(), 4);
        assert_eq!(pair_of(2, 5).unwrap(), 2);
        assert_eq!(pair_of(3, 7).unwrap(), 2);
        assert_eq!(pair_of(2, 4), Err(Error::NotCoprime { p: 2, q: 4 }));
        assert!(pair_of(0, 5).is_err());
    }

    #[test]
    fn pair_of_is_involutive() {
        for q in 2..300u64 {
            for p in (1..q).filter(|p| p.gcd(&q) == 1) {
                assert_eq!(pair_of(pair_of(p, q).unwrap(), q).unwrap(), p);
            }
        }
    }

    #[test]
    fn build_gq_examples() {
        let g5 = build_gq(5).unwrap();
        assert_eq!(g5.self_paired, vec![2, 3]);
        assert_eq!(g5.pairs, vec![(1, 4)]);
        assert_eq!(g5.fractions(), vec![r(1, 5), r(2, 5), r(3, 5)]);

        let g2 = build_gq(2).unwrap();
        assert_eq!(g2.self_paired, vec![1]);
        assert!(g2.pairs.is_empty());
        assert_eq!(g2.fractions(), vec![r(1, 2)]);

        let g7 = build_gq(7).unwrap();
        assert!(g7.self_paired.is_empty());
        assert_eq!(g7.pairs, vec![(1, 6), (2, 3), (4, 5)]);
        assert_eq!(g7.fractions(), vec![r(1, 7), r(2, 7), r(4, 7)]);

        assert_eq!(build_gq(1).unwrap().fractions(), vec![r(0, 1)]);
        assert_eq!(build_gq(4).unwrap().fractions(), vec![r(1, 4)]);
    }

    #[test]
    fn stream_prefix() {
        let first: Vec<String> = iterate_g(7).map(|g| g.to_string()).collect();
        assert_eq!(first, ["0", "1/2", "1/3", "1/4", "1/5", "2/5", "3/5"]);
        assert_eq!(iterate_g(1).count(), 1);
        let next: Vec<String> = GStream::new().skip(7).take(3).map(|g| g.to_string()).collect();
        assert_eq!(next, ["1/6", "1/7", "2/7"]);
    }

    #[test]
    fn equivalent_examples() {
        let w = equivalent(r(1, 5), r(4, 5)).unwrap().unwrap();
        assert_eq!(w.entries(), [4, -1, 5, -1]);
        assert_eq!(equivalent(r(1, 3), r(1, 3)).unwrap(), Some(UnimodularMatrix::IDENTITY));
        assert_eq!(equivalent(r(1, 5), r(2, 5)).unwrap(), None);
        assert_eq!(equivalent(r(1, 3), r(1, 2)).unwrap(), None);
        assert!(matches!(
            equivalent(Ratio::new_raw(2, 10), r(1, 5)),
            Err(Error::NotReduced { .. })
        ));
        assert!(equivalent(r(0, 1), r(1, 5)).is_err());
    }

    #[test]
    fn witness_maps_endpoints() {
        let sigma = equivalent(r(2, 13), r(6, 13)).unwrap().unwrap();
        assert_eq!(sigma.det(), 1);
        assert_eq!(sigma.apply(ExtRational::Infinity), ExtRational::from(r(6, 13)));
        assert_eq!(sigma.apply(r(2, 13).into()), ExtRational::Infinity);
    }

    #[test]
    fn matrix_normalization_and_algebra() {
        let m = UnimodularMatrix::new(-1, 0, 0, -1).unwrap();
        assert_eq!(m, UnimodularMatrix::IDENTITY);
        let s = UnimodularMatrix::new(0, 1, -1, 0).unwrap();
        assert_eq!(s, UnimodularMatrix::INVERSION);
        assert!(UnimodularMatrix::new(2, 0, 0, 1).is_err());
        let t = UnimodularMatrix::translation(3);
        let prod = t.checked_mul(&t.inverse()).unwrap();
        assert_eq!(prod, UnimodularMatrix::IDENTITY);
        // S^2 = -I = I in PSL
        assert_eq!(s.checked_mul(&s).unwrap(), UnimodularMatrix::IDENTITY);
    }

    #[test]
    fn sojourn_examples() {
        assert!((sojourn_time(r(0, 1), 2.0f64).unwrap() - 1.386294).abs() < 1e-6);
        assert!((sojourn_time(r(1, 2), 2.0f64).unwrap() - 2.772589).abs() < 1e-6);
        assert_eq!(sojourn_time(r(2, 5), 1.0), Err(Error::CoreHeight(1.0)));
        assert!(matches!(sojourn_time(r(4, 5), 2.0), Err(Error::Precondition(_))));
        let s32: f32 = sojourn_time(r(1, 2), 2.0f32).unwrap();
        assert!((s32 - 2.772589).abs() < 1e-5);
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonical_representative(r(4, 5)).unwrap().w(), r(1, 5));
        assert_eq!(canonical_representative(r(2, 5)).unwrap().w(), r(2, 5));
        assert_eq!(canonical_representative(r(0, 1)).unwrap().w(), r(0, 1));
        assert!(canonical_representative(r(3, 2)).is_err());
    }

    #[test]
    fn records_serialize() {
        let recs = build_gq(5).unwrap().records(2.0).unwrap();
        let json = serde_json::to_string(&recs[0]).unwrap();
        assert_eq!(json, r#"{"q":5,"p":1,"sojourn":4.605170185988092,"class":"pair_min"}"#);
    }
}
