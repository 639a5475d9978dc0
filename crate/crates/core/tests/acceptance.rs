//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use num_integer::Integer;
use num_rational::Ratio;

use modscat::arith::{brute_force_s, crt_solutions, factorize, s_of_q};
use modscat::counting::{check_s_bounds, pi_count, pi_count_by_enumeration, sieve_tables, CountTable};
use modscat::hyperbolic::{trace_sojourn, DEFAULT_TAIL_FACTOR};
use modscat::lfunction::{f_closed, f_direct_with_table, f_euler, residue_constant, ZETA_TERMS};
use modscat::scatterset::{build_gq, equivalent, ExtRational, GStream, Rational};

// Tolerances and ranges, fixed up front.
const ORACLE_Q_MAX: u64 = 20_000;
const CARDINALITY_Q_MAX: u64 = 10_000;
const EQUIVALENCE_Q_MAX: i64 = 500;
const IDENTITY_X_MAX: u64 = 1_000_000;
const BOUNDS_X_MAX: u64 = 1_000_000;
const ASYMPTOTIC_X_MAX: u64 = 10_000_000;
const S_TAU_TOLERANCE: f64 = 0.05;
const PSI_TOLERANCE: f64 = 0.01;
const PI_T0: f64 = 2.0;
const PI_EXACT_YS: [f64; 4] = [16.0, 100.0, 1e4, 4e6];
const PI_RATIO_Y: f64 = 4e8;
const PI_RATIO_BAND: (f64, f64) = (0.95, 1.05);
const SOJOURN_Q_MAX: u64 = 20;
const SOJOURN_T0S: [f64; 3] = [1.5, 2.0, 5.0];
const SOJOURN_STEP: f64 = 1e-3;
const SOJOURN_SLACK: f64 = 1e-6;
const L_S_VALUES: [f64; 4] = [2.0, 2.5, 3.0, 4.0];
const L_TRUNCATION: u64 = 1_000_000;
const L_TOLERANCE: f64 = 1e-4;
const RESIDUE_TOLERANCE: f64 = 1e-8;
const HISTOGRAM_N: u64 = 10_000;
const HISTOGRAM_BINS: usize = 100;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_oracle_equivalence() -> Outcome {
    for q in 2..=ORACLE_Q_MAX {
        let brute = brute_force_s(q).map_err(|e| e.to_string())?;
        let s = s_of_q(q).map_err(|e| e.to_string())?;
        ensure(s as usize == brute.len(), || {
            format!("q={q}: s_of_q={s}, brute={}", brute.len())
        })?;
        match crt_solutions(&factorize(q).unwrap()) {
            Ok(w) => ensure(w.solutions == brute.solutions, || format!("q={q}: CRT set differs"))?,
            Err(_) => ensure(brute.is_empty(), || format!("q={q}: CRT rejected a solvable modulus"))?,
        }
    }
    Ok(format!("2 <= q <= {ORACLE_Q_MAX}"))
}

fn c2_cardinality() -> Outcome {
    for q in 2..=CARDINALITY_Q_MAX {
        let g = build_gq(q).map_err(|e| e.to_string())?;
        let phi = (1..q).filter(|p| p.gcd(&q) == 1).count();
        let s = brute_force_s(q).unwrap().len();
        ensure(2 * g.len() == phi + s, || {
            format!("q={q}: |G_q|={} phi={phi} s={s}", g.len())
        })?;
        // the decomposition partitions I_q
        let mut seen: BTreeSet<u64> = g.self_paired.iter().copied().collect();
        for &(a, b) in &g.pairs {
            ensure(seen.insert(a) && seen.insert(b), || format!("q={q}: overlapping pair"))?;
        }
        ensure(seen.len() == phi, || format!("q={q}: partition misses residues"))?;
    }
    Ok(format!("2 <= q <= {CARDINALITY_Q_MAX}"))
}

fn c3_equivalence() -> Outcome {
    let mut witnesses = 0u64;
    for q in 2..=EQUIVALENCE_Q_MAX {
        let units: Vec<i64> = (1..q).filter(|p| p.gcd(&q) == 1).collect();
        for &p1 in &units {
            for &p2 in &units {
                let (w1, w2) = (Rational::new(p1, q), Rational::new(p2, q));
                let got = equivalent(w1, w2).map_err(|e| e.to_string())?;
                if p1 == p2 {
                    ensure(got.is_some(), || format!("{w1}: identity missing"))?;
                    continue;
                }
                let divides = (p1 * p2 + 1) % q == 0;
                ensure(got.is_some() == divides, || {
                    format!("{w1} ~ {w2}: witness={got:?}, divides={divides}")
                })?;
                if let Some(m) = got {
                    witnesses += 1;
                    let to_w2 =
                        m.apply(ExtRational::Infinity) == ExtRational::Finite(Ratio::new(p2 as i128, q as i128));
                    let to_inf = m.apply(w1.into()) == ExtRational::Infinity;
                    ensure(m.det() == 1 && to_w2 && to_inf, || {
                        format!("{w1} ~ {w2}: bad witness {m}")
                    })?;
                }
            }
        }
    }
    Ok(format!("q <= {EQUIVALENCE_Q_MAX}, {witnesses} witnesses verified"))
}

fn c4_identities(table: &CountTable) -> Outcome {
    let mut phi_sum = 0u64;
    for x in 1..=IDENTITY_X_MAX {
        phi_sum += table.phi(x).unwrap();
        let s = table.s_sum(x).unwrap();
        let split = table.tau_at(x).unwrap() + table.tau_at(x / 2).unwrap();
        ensure(s == split, || format!("x={x}: S={s}, tau(x)+tau(x/2)={split}"))?;
        let psi2 = 2 * table.psi(x).unwrap();
        ensure(psi2 == phi_sum + s, || {
            format!("x={x}: 2 Psi={psi2}, sum phi + S={}", phi_sum + s)
        })?;
    }
    Ok(format!("all x <= {IDENTITY_X_MAX}"))
}

fn c5_bounds(table: &CountTable) -> Outcome {
    for x in 5..=BOUNDS_X_MAX {
        ensure(check_s_bounds(x as f64, table).unwrap(), || {
            format!("bounds fail at x={x}")
        })?;
    }
    Ok(format!("5 <= x <= {BOUNDS_X_MAX}"))
}

fn c6_asymptotics(table: &CountTable) -> Outcome {
    let rel = |exact: u64, main: f64| (exact as f64 / main - 1.0).abs();
    let s_err = |x: u64| rel(table.s_sum(x).unwrap(), 3.0 * x as f64 / (2.0 * PI));
    let tau_err = |x: u64| rel(table.tau_at(x).unwrap(), x as f64 / PI);
    let psi_err = |x: u64| rel(table.psi(x).unwrap(), 3.0 * (x as f64).powi(2) / (2.0 * PI * PI));

    let top = ASYMPTOTIC_X_MAX;
    let (t3, t7) = (tau_err(1_000), tau_err(top));
    let (s3, s7) = (s_err(1_000), s_err(top));
    let (p3, p5) = (psi_err(1_000), psi_err(100_000));
    ensure(t7 <= S_TAU_TOLERANCE, || format!("tau error {t7:.3e} at 1e7"))?;
    ensure(s7 <= S_TAU_TOLERANCE, || format!("S error {s7:.3e} at 1e7"))?;
    ensure(p5 <= PSI_TOLERANCE, || format!("Psi error {p5:.3e} at 1e5"))?;
    ensure(t7 <= t3 && s7 <= s3 && p5 <= p3, || {
        "error grew from 1e3 to the last checkpoint".into()
    })?;
    Ok(format!(
        "tau {t3:.2e}->{t7:.2e}, S {s3:.2e}->{s7:.2e}, Psi {p3:.2e}->{p5:.2e}"
    ))
}

fn c7_main_identity(table: &CountTable) -> Outcome {
    let mut details = Vec::new();
    for y in PI_EXACT_YS {
        let enumerated = pi_count_by_enumeration(y, PI_T0).map_err(|e| e.to_string())?;
        let q_max = ((y.sqrt() / PI_T0).floor()) as u64;
        let psi = table.psi(q_max).unwrap();
        ensure(enumerated == psi, || {
            format!("Y={y}: enumeration {enumerated} vs Psi({q_max}) {psi}")
        })?;
        ensure(pi_count(y, PI_T0, table).unwrap() == psi, || {
            format!("Y={y}: pi_count mismatch")
        })?;
        details.push(format!("Pi({y})={psi}"));
    }
    let pi = pi_count(PI_RATIO_Y, PI_T0, table).unwrap();
    let ratio = pi as f64 * 2.0 * PI * PI * PI_T0 * PI_T0 / (3.0 * PI_RATIO_Y);
    ensure((PI_RATIO_BAND.0..=PI_RATIO_BAND.1).contains(&ratio), || {
        format!("ratio {ratio} at Y=4e8")
    })?;
    Ok(format!("{}, ratio at 4e8 = {ratio:.5}", details.join(", ")))
}

fn c8_sojourn() -> Outcome {
    let mut worst = 0.0f64;
    let mut traced = 0;
    let members: Vec<_> = GStream::new().take_while(|g| g.q <= SOJOURN_Q_MAX).collect();
    for &t0 in &SOJOURN_T0S {
        for g in &members {
            let tr = trace_sojourn(g.w(), t0, SOJOURN_STEP, DEFAULT_TAIL_FACTOR).map_err(|e| e.to_string())?;
            let gap = tr.gap();
            worst = worst.max(gap);
            traced += 1;
            ensure(gap <= 2.0 * SOJOURN_STEP + SOJOURN_SLACK, || {
                format!(
                    "{g} at T0={t0}: measured {} vs {}",
                    tr.measured_sojourn,
                    tr.predicted_sojourn()
                )
            })?;
        }
    }
    Ok(format!("{traced} traces, worst gap {worst:.2e}"))
}

fn c9_lfunction() -> Outcome {
    let table = sieve_tables(L_TRUNCATION).unwrap();
    let mut worst = 0.0f64;
    for s in L_S_VALUES {
        let d = f_direct_with_table(s, &table).unwrap().value;
        let e = f_euler(s, L_TRUNCATION).unwrap().value;
        let c = f_closed(s, ZETA_TERMS).unwrap().value;
        let gap = (d - e).abs().max((e - c).abs()).max((d - c).abs());
        worst = worst.max(gap);
        ensure(gap <= L_TOLERANCE, || {
            format!("s={s}: direct {d}, euler {e}, closed {c}")
        })?;
    }
    let c: f64 = residue_constant();
    let residue_gap = (c - 1.0 / PI).abs();
    ensure(residue_gap <= RESIDUE_TOLERANCE, || {
        format!("residue {c} off by {residue_gap:.2e}")
    })?;
    Ok(format!("worst route gap {worst:.2e}, residue gap {residue_gap:.2e}"))
}

fn c10_histogram() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_modscat"))
        .args([
            "histogram",
            "--first",
            &HISTOGRAM_N.to_string(),
            "--bins",
            &HISTOGRAM_BINS.to_string(),
        ])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("exit status {:?}", out.status))?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    ensure(lines.next() == Some("bin_left,bin_right,count,density"), || {
        "bad header".into()
    })?;
    let counts: Vec<u64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    ensure(counts.len() == HISTOGRAM_BINS, || format!("{} rows", counts.len()))?;
    let total: u64 = counts.iter().sum();
    ensure(total == HISTOGRAM_N, || format!("counts sum to {total}"))?;
    Ok(format!("{} rows summing to {total}", counts.len()))
}

fn main() {
    let start = Instant::now();
    let table = sieve_tables(ASYMPTOTIC_X_MAX).expect("sieve to 1e7");
    println!("sieved to {ASYMPTOTIC_X_MAX} in {:.2?}", start.elapsed());

    let criteria: Vec<Criterion> = vec![
        ("1 oracle equivalence (s_q)", Box::new(c1_oracle_equivalence)),
        ("2 cardinality |G_q| = (phi + s)/2", Box::new(c2_cardinality)),
        ("3 equivalence witnesses", Box::new(c3_equivalence)),
        ("4 exact identities", Box::new(|| c4_identities(&table))),
        ("5 explicit S(x) bounds", Box::new(|| c5_bounds(&table))),
        ("6 asymptotics", Box::new(|| c6_asymptotics(&table))),
        ("7 Pi(Y) = Psi(sqrt(Y)/T0)", Box::new(|| c7_main_identity(&table))),
        ("8 sojourn numerics", Box::new(c8_sojourn)),
        ("9 L-function routes and residue", Box::new(c9_lfunction)),
        ("10 histogram", Box::new(c10_histogram)),
    ];

    let mut failed = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("criterion {name}: PASS ({detail}) [{:.2?}]", t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why}) [{:.2?}]", t.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
