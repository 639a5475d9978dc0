//! Scattering geodesics on the modular surface.
//!
//! Scattering geodesics of `H / PSL(2, Z)` are classified by the rationals
//! `p/q` in `[0, 1)` with `p^2 = -1 (mod q)` or `p` the smaller member of a
//! pair `p p' = -1 (mod q)`; the geodesic for `p/q` spends `2 ln(q T0)` in
//! the compact core of height `T0`. This crate builds that classification
//! and the counting functions around it:
//!
//! - [`arith`]: factorization and the solutions of `x^2 = -1 (mod q)`
//! - [`scatterset`]: the sets `G_q`, the ordered set `G`, equivalence witnesses
//! - [`counting`]: sieved `S(x)`, `tau(x)`, `Psi(x)`, `Pi(Y)` and their main terms
//! - [`hyperbolic`]: Mobius action, reduction into the fundamental domain,
//!   numerical sojourn measurement
//! - [`lfunction`]: the Dirichlet series `F(s)` by three routes
//! - [`cli`]: the `modscat` command-line front end
//!
//! Floating-point code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix it to `f64`.

// `!(x > 0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod cli;
pub mod counting;
pub mod error;
pub mod hyperbolic;
pub mod lfunction;
pub mod scalar;
pub mod scatterset;

pub use arith::{
    brute_force_s, classify, crt_solutions, factorize, hensel_lift, s_of_q, sqrt_minus_one_mod_prime, Factorization,
    QClass, SqWitness,
};
pub use counting::{
    asymptotic_report, check_s_bounds, pi_count, pi_count_by_enumeration, sieve_tables, AsymptoticReport, CountKind,
    CountTable,
};
pub use error::{Error, Result};
pub use hyperbolic::{
    hyperbolic_distance, mobius_apply, reduce_to_f, trace_sojourn, GeodesicTrace, HPoint, ReducedPoint,
};
pub use lfunction::{f_closed, f_direct, f_euler, residue_constant, SeriesValue};
pub use scalar::Real;
pub use scatterset::{
    build_gq, canonical_representative, equivalent, iterate_g, pair_of, sojourn_time, GStream, GqSet, MemberClass,
    Rational, ScatteringGeodesicId, UnimodularMatrix,
};

pub type HPoint64 = HPoint<f64>;
pub type ReducedPoint64 = ReducedPoint<f64>;
pub type GeodesicTrace64 = GeodesicTrace<f64>;
pub type SeriesValue64 = SeriesValue<f64>;
pub type HPoint32 = HPoint<f32>;
