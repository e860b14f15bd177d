//! Matching expressions against linear combinations of targets.
//!
//! Several questions in constraint analysis reduce to: can `f` be written as
//! `sum_k c_k * t_k` where the `c_k` are polynomials in a known set of atoms?
//! This module answers them by expanding both sides over canonical term
//! cores and solving an exact linear system over the rationals.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::expr::{Expr, Node, Rational};
use crate::symbol::Symbol;

/// All products of at most `degree` generators (with repetition), including
/// the empty product `1`, deduplicated and in canonical order.
pub fn monomials(generators: &[Expr], degree: u32) -> Vec<Expr> {
    let mut out: BTreeSet<Expr> = BTreeSet::new();
    out.insert(Expr::one());
    let mut frontier: Vec<Expr> = vec![Expr::one()];
    for _ in 0..degree {
        let mut next = Vec::new();
        for m in &frontier {
            for g in generators {
                let p = Expr::mul2(m, g);
                if out.insert(p.clone()) {
                    next.push(p);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out.into_iter().collect()
}

/// Atomic factors occurring in `exprs` whose symbols all satisfy `keep`.
/// Positive integer powers contribute their base; fractional or negative
/// powers contribute the whole power atom so that rebuilt monomials never
/// introduce spurious inverses.
pub fn collect_generators(exprs: &[&Expr], keep: impl Fn(&Symbol) -> bool) -> Vec<Expr> {
    let mut out: BTreeSet<Expr> = BTreeSet::new();
    for e in exprs {
        for core in e.rational_terms().keys() {
            for factor in core.factors() {
                let (base, negative_or_fractional) = match factor.node() {
                    Node::Pow(b, r) => (b.clone(), r.is_negative() || !r.is_integer()),
                    _ => (factor.clone(), false),
                };
                let candidate = if negative_or_fractional {
                    factor.clone()
                } else {
                    base
                };
                if candidate.as_num().is_some() {
                    continue;
                }
                if candidate.symbols().iter().all(&keep) {
                    out.insert(candidate);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Write `rhs` as a rational linear combination of `products`, exactly.
/// Returns the coefficient vector, or `None` when no exact combination
/// exists. All-zero `rhs` yields the zero vector.
pub fn match_rational_combination(rhs: &Expr, products: &[Expr]) -> Option<Vec<Rational>> {
    let rhs_terms = rhs.rational_terms();
    let product_terms: Vec<BTreeMap<Expr, Rational>> =
        products.iter().map(Expr::rational_terms).collect();
    let mut cores: BTreeSet<Expr> = BTreeSet::new();
    cores.extend(rhs_terms.keys().cloned());
    for pt in &product_terms {
        cores.extend(pt.keys().cloned());
    }
    let cores: Vec<Expr> = cores.into_iter().collect();
    // rows: one per core; columns: one per product, then the rhs
    let ncols = products.len();
    let mut aug: Vec<Vec<Rational>> = cores
        .iter()
        .map(|core| {
            let mut row: Vec<Rational> = product_terms
                .iter()
                .map(|pt| pt.get(core).cloned().unwrap_or_else(Rational::zero))
                .collect();
            row.push(rhs_terms.get(core).cloned().unwrap_or_else(Rational::zero));
            row
        })
        .collect();
    // exact Gauss-Jordan over the rationals
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut next_row = 0;
    for col in 0..ncols {
        let Some(prow) = (next_row..aug.len()).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(next_row, prow);
        let pivot = aug[next_row][col].clone();
        for c in col..=ncols {
            aug[next_row][c] = &aug[next_row][c] / &pivot;
        }
        for r in 0..aug.len() {
            if r == next_row || aug[r][col].is_zero() {
                continue;
            }
            let factor = aug[r][col].clone();
            for c in col..=ncols {
                let delta = &factor * &aug[next_row][c];
                aug[r][c] = &aug[r][c] - &delta;
            }
        }
        pivot_cols.push(col);
        next_row += 1;
        if next_row == aug.len() {
            break;
        }
    }
    // consistency: zero rows must have zero rhs
    for row in aug.iter().skip(next_row) {
        if !row[ncols].is_zero() {
            return None;
        }
    }
    let mut coeffs = vec![Rational::zero(); ncols];
    for (row, &col) in pivot_cols.iter().enumerate() {
        coeffs[col] = aug[row][ncols].clone();
    }
    Some(coeffs)
}

/// Result of [`match_combination`]: one coefficient expression per target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Combination {
    pub coefficients: Vec<Expr>,
    /// Degree in the generators at which the match succeeded.
    pub degree: u32,
}

/// Write `rhs` as `sum_k c_k * targets_k` with each `c_k` a polynomial of
/// degree at most `max_degree` in `generators` (rational coefficients).
/// Degrees are tried in increasing order, so the reported combination uses
/// the lowest degree that works.
pub fn match_combination(
    rhs: &Expr,
    targets: &[Expr],
    generators: &[Expr],
    max_degree: u32,
) -> Option<Combination> {
    if targets.is_empty() {
        return rhs.is_zero().then(|| Combination {
            coefficients: Vec::new(),
            degree: 0,
        });
    }
    for degree in 0..=max_degree {
        let mons = monomials(generators, degree);
        let mut products = Vec::with_capacity(targets.len() * mons.len());
        for t in targets {
            for m in &mons {
                products.push(Expr::mul2(m, t));
            }
        }
        let Some(raw) = match_rational_combination(rhs, &products) else {
            continue;
        };
        let coefficients: Vec<Expr> = (0..targets.len())
            .map(|k| {
                let parts: Vec<Expr> = mons
                    .iter()
                    .enumerate()
                    .map(|(j, m)| Expr::mul2(&Expr::num(raw[k * mons.len() + j].clone()), m))
                    .collect();
                Expr::add_slice(&parts)
            })
            .collect();
        #[cfg(debug_assertions)]
        {
            let rebuilt: Vec<Expr> = coefficients
                .iter()
                .zip(targets)
                .map(|(c, t)| Expr::mul2(c, t))
                .collect();
            let residual = Expr::sub(rhs, &Expr::add_slice(&rebuilt));
            debug_assert!(
                residual.is_zero(),
                "matched combination does not reproduce the input: residual {residual}"
            );
        }
        return Some(Combination {
            coefficients,
            degree,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Fun;
    use crate::symbol::SymbolKind;

    fn sym(name: &str) -> Expr {
        Expr::sym(Symbol::coordinate(name))
    }

    #[test]
    fn monomial_bases_grow_by_degree() {
        let a = sym("a");
        let b = sym("b");
        let gens = [a.clone(), b.clone()];
        assert_eq!(monomials(&gens, 0), vec![Expr::one()]);
        assert_eq!(monomials(&gens, 1).len(), 3);
        assert_eq!(monomials(&gens, 2).len(), 6);
        // duplicate products collapse
        let dup = [a.clone(), a.clone()];
        assert_eq!(monomials(&dup, 2).len(), 3);
    }

    #[test]
    fn generators_come_from_atomic_factors() {
        let w = Symbol::coordinate("w");
        let m = Symbol::parameter("m");
        let e = Expr::add2(
            &Expr::mul2(
                &Expr::fun(Fun::Exp, Expr::sym(w.clone())),
                &Expr::sym(m.clone()).powi(2),
            ),
            &sym("x").powi(3),
        );
        let gens = collect_generators(&[&e], |_| true);
        assert!(gens.contains(&Expr::fun(Fun::Exp, Expr::sym(w.clone()))));
        assert!(gens.contains(&Expr::sym(m.clone())));
        assert!(gens.contains(&sym("x")));
        assert_eq!(gens.len(), 3);
        // kind filter drops the parameter
        let only_coords = collect_generators(&[&e], |s| s.kind() == SymbolKind::Coordinate);
        assert!(!only_coords.contains(&Expr::sym(m)));
    }

    #[test]
    fn rational_combinations_are_exact() {
        let x = sym("x");
        let y = sym("y");
        let products = [x.clone(), y.clone(), Expr::mul2(&x, &y)];
        let rhs = Expr::add_slice(&[
            Expr::mul2(&Expr::int(2), &x),
            Expr::mul2(&Expr::num(crate::expr::ratio(-1, 3)), &Expr::mul2(&x, &y)),
        ]);
        let c = match_rational_combination(&rhs, &products).unwrap();
        assert_eq!(c[0], crate::expr::rat(2));
        assert!(c[1].is_zero());
        assert_eq!(c[2], crate::expr::ratio(-1, 3));
        // no rational combination of x and y gives sin(x)
        let s = Expr::fun(Fun::Sin, x.clone());
        assert!(match_rational_combination(&s, &[x, y]).is_none());
    }

    #[test]
    fn combination_matching_escalates_degree() {
        let x = sym("x");
        let y = sym("y");
        let target = Expr::add2(&x.powi(2), &y); // t
        let rhs = Expr::mul2(&x, &target); // x * t needs degree 1
        let gens = [x.clone(), y.clone()];
        let m = match_combination(&rhs, &[target.clone()], &gens, 3).unwrap();
        assert_eq!(m.degree, 1);
        assert!(Expr::sub(&rhs, &Expr::mul2(&m.coefficients[0], &target)).is_zero());
        // sums of targets with mixed polynomial coefficients
        let t2 = Expr::fun(Fun::Exp, x.clone());
        let rhs2 = Expr::add2(
            &Expr::mul2(&y.powi(2), &target),
            &Expr::mul2(&Expr::int(3), &t2),
        );
        let m2 = match_combination(&rhs2, &[target.clone(), t2.clone()], &gens, 3).unwrap();
        assert_eq!(m2.degree, 2);
        let rebuilt = Expr::add2(
            &Expr::mul2(&m2.coefficients[0], &target),
            &Expr::mul2(&m2.coefficients[1], &t2),
        );
        assert!(Expr::sub(&rhs2, &rebuilt).is_zero());
        // unmatchable stays unmatched at every degree
        assert!(match_combination(&Expr::fun(Fun::Log, x), &[target], &gens, 2).is_none());
    }

    #[test]
    fn empty_target_set_matches_only_zero() {
        assert!(match_combination(&Expr::zero(), &[], &[], 2).is_some());
        assert!(match_combination(&sym("x"), &[], &[], 2).is_none());
    }
}
