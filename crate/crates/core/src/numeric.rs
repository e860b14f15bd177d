//! Floating-point evaluation and the seeded numeric probe.
//!
//! The probe samples every symbol of an expression at deterministic
//! pseudo-random points in `[0.3, 1.7]` (positive, away from both zero and
//! one, so logs, roots and inverses are well defined) and reports the largest
//! magnitude seen.  It backs two things: the debug cross-check of symbolic
//! zero tests, and the self-diagnostic numeric spot checks in the CLI.
//!
//! Sampling is a pure function of `(seed, symbol name, point index, salt)`,
//! so runs are reproducible across platforms and thread counts.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::ToPrimitive;

use crate::error::CoreError;
use crate::expr::{Expr, Fun, Node};
use crate::symbol::Symbol;

/// Magnitudes below this are considered numerically zero by the probe.
pub const PROBE_EPS: f64 = 1e-9;

pub const DEFAULT_PROBE_SEED: u64 = 0x9E37_79B9_7F4A_7C15;
pub const DEFAULT_PROBE_POINTS: u32 = 20;

static PROBE_SEED: AtomicU64 = AtomicU64::new(DEFAULT_PROBE_SEED);
static PROBE_POINTS: AtomicU32 = AtomicU32::new(DEFAULT_PROBE_POINTS);

/// Reconfigure the ambient probe used by debug zero-test cross-checks.
pub fn set_probe_defaults(seed: u64, points: u32) {
    PROBE_SEED.store(seed, Ordering::Relaxed);
    PROBE_POINTS.store(points.max(1), Ordering::Relaxed);
}

pub fn probe_defaults() -> (u64, u32) {
    (
        PROBE_SEED.load(Ordering::Relaxed),
        PROBE_POINTS.load(Ordering::Relaxed),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    MissingSymbol(String),
    /// Log of a nonpositive value, fractional power of a negative value,
    /// division by zero, overflow: anything outside the real domain.
    Domain,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::MissingSymbol(name) => write!(f, "no value bound for symbol {name}"),
            EvalError::Domain => write!(f, "evaluation left the real domain"),
        }
    }
}

/// Evaluate with symbol values supplied by `lookup`.
pub fn eval(e: &Expr, lookup: &dyn Fn(&Symbol) -> Option<f64>) -> Result<f64, EvalError> {
    let v = eval_inner(e, lookup)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain)
    }
}

fn eval_inner(e: &Expr, lookup: &dyn Fn(&Symbol) -> Option<f64>) -> Result<f64, EvalError> {
    let v = match e.node() {
        Node::Num(r) => r.to_f64().ok_or(EvalError::Domain)?,
        Node::Sym(s) => lookup(s).ok_or_else(|| {
            EvalError::MissingSymbol(alloc::string::ToString::to_string(s.name()))
        })?,
        Node::Add(ch) => {
            let mut acc = 0.0;
            for c in ch {
                acc += eval_inner(c, lookup)?;
            }
            acc
        }
        Node::Mul(ch) => {
            let mut acc = 1.0;
            for c in ch {
                acc *= eval_inner(c, lookup)?;
            }
            acc
        }
        Node::Pow(b, r) => {
            let bv = eval_inner(b, lookup)?;
            let rv = r.to_f64().ok_or(EvalError::Domain)?;
            if bv == 0.0 && rv < 0.0 {
                return Err(EvalError::Domain);
            }
            libm::pow(bv, rv)
        }
        Node::Fun(f, a) => {
            let av = eval_inner(a, lookup)?;
            match f {
                Fun::Exp => libm::exp(av),
                Fun::Log => {
                    if av <= 0.0 {
                        return Err(EvalError::Domain);
                    }
                    libm::log(av)
                }
                Fun::Sin => libm::sin(av),
                Fun::Cos => libm::cos(av),
            }
        }
    };
    if v.is_nan() {
        Err(EvalError::Domain)
    } else {
        Ok(v)
    }
}

/// splitmix64 step: a tiny, well-known 64-bit mixer; plenty for probe points.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic sample in `[0.3, 1.7]` for one symbol at one probe point.
pub fn sample_value(seed: u64, name: &str, point: u32, salt: u32) -> f64 {
    let mut state = seed
        ^ fnv1a(name)
        ^ (point as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
        ^ (salt as u64).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7);
    let z = splitmix64(&mut state);
    let unit = (z >> 11) as f64 / (1u64 << 53) as f64;
    0.3 + 1.4 * unit
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeReport {
    pub points_tested: u32,
    pub points_skipped: u32,
    pub max_abs: f64,
}

impl ProbeReport {
    pub fn says_zero(&self) -> bool {
        self.max_abs < PROBE_EPS
    }
}

/// Numerically probe `e` for being identically zero.
///
/// Points whose sample hits a domain failure are resampled up to eight times
/// and then skipped; if every point is skipped the probe is inconclusive and
/// reports [`CoreError::ProbeDomain`].
pub fn probe_zero(e: &Expr, seed: u64, points: u32) -> Result<ProbeReport, CoreError> {
    let syms: Vec<Symbol> = e.symbols().into_iter().collect();
    let mut tested = 0u32;
    let mut skipped = 0u32;
    let mut max_abs = 0.0f64;
    for point in 0..points.max(1) {
        let mut succeeded = false;
        for salt in 0..8u32 {
            let values: BTreeMap<Symbol, f64> = syms
                .iter()
                .map(|s| (s.clone(), sample_value(seed, s.name(), point, salt)))
                .collect();
            match eval(e, &|s: &Symbol| values.get(s).copied()) {
                Ok(v) => {
                    if v.abs() > max_abs {
                        max_abs = v.abs();
                    }
                    tested += 1;
                    succeeded = true;
                    break;
                }
                Err(_) => continue,
            }
        }
        if !succeeded {
            skipped += 1;
        }
    }
    if tested == 0 {
        return Err(CoreError::ProbeDomain(alloc::format!(
            "all {points} probe points hit domain failures for: {e}"
        )));
    }
    Ok(ProbeReport {
        points_tested: tested,
        points_skipped: skipped,
        max_abs,
    })
}

/// Debug-build cross-check behind every symbolic zero verdict.  Inconclusive
/// probes (domain failures at every point) are skipped silently; a clean
/// disagreement is a bug in the rewrite table and panics loudly.
#[cfg(debug_assertions)]
pub(crate) fn debug_probe_check(e: &Expr, symbolic: bool) {
    // Literal rationals are decided exactly; probing adds nothing.
    if e.as_num().is_some() {
        return;
    }
    let (seed, points) = probe_defaults();
    if let Ok(report) = probe_zero(e, seed, points) {
        if report.says_zero() != symbolic {
            panic!(
                "zero-test disagreement: symbolic says {}, probe max magnitude {:.3e} \
                 over {} points, on: {}",
                if symbolic { "zero" } else { "nonzero" },
                report.max_abs,
                report.points_tested,
                e
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{ratio, Expr, Fun};
    use crate::symbol::Symbol;

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let a = sample_value(7, "x", 3, 0);
        let b = sample_value(7, "x", 3, 0);
        assert_eq!(a, b);
        for p in 0..100 {
            let v = sample_value(42, "wdot", p, 1);
            assert!((0.3..=1.7).contains(&v), "sample out of range: {v}");
        }
        assert_ne!(sample_value(7, "x", 0, 0), sample_value(7, "y", 0, 0));
    }

    #[test]
    fn probe_detects_hidden_identity() {
        // sin(2x) - 2 sin(x) cos(x) is outside the rewrite table: canonical
        // form is nonzero, but the probe sees zero everywhere.
        let x = Expr::sym(Symbol::coordinate("x"));
        let two_x = Expr::mul2(&Expr::int(2), &x);
        let lhs = Expr::fun(Fun::Sin, two_x);
        let rhs = Expr::mul_slice(&[
            Expr::int(2),
            Expr::fun(Fun::Sin, x.clone()),
            Expr::fun(Fun::Cos, x.clone()),
        ]);
        let diff = Expr::sub(&lhs, &rhs);
        let report = probe_zero(&diff, DEFAULT_PROBE_SEED, 20).unwrap();
        assert!(report.says_zero());
        assert!(!diff.is_literal_zero());
    }

    #[test]
    fn probe_skips_points_outside_domain() {
        // log(x - 1) is undefined for x < 1; some samples fail, some pass.
        let x = Expr::sym(Symbol::coordinate("x"));
        let e = Expr::fun(Fun::Log, Expr::sub(&x, &Expr::one()));
        let report = probe_zero(&e, DEFAULT_PROBE_SEED, 20).unwrap();
        assert!(report.points_tested > 0);
        assert!(!report.says_zero());
    }

    #[test]
    fn eval_reports_domain_failures() {
        let x = Expr::sym(Symbol::coordinate("x"));
        let e = Expr::fun(Fun::Log, x.clone());
        assert_eq!(eval(&e, &|_| Some(-1.0)), Err(EvalError::Domain));
        let half = Expr::powr(&x, ratio(1, 2));
        assert_eq!(eval(&half, &|_| Some(-4.0)), Err(EvalError::Domain));
        assert!((eval(&half, &|_| Some(4.0)).unwrap() - 2.0).abs() < 1e-12);
    }
}
