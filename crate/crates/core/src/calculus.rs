//! Differentiation, simultaneous substitution, and coefficient extraction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, ToPrimitive};

use crate::error::CoreError;
use crate::expr::{rat, Expr, Fun, Node, Rational};
use crate::symbol::{Symbol, SymbolKind, SymbolTable};

/// Partial derivative with respect to one symbol; all other symbols are held
/// constant.
pub fn diff(e: &Expr, s: &Symbol) -> Expr {
    if !e.contains_symbol(s) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(s2) => {
            if s2 == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(ch) => {
            let parts: Vec<Expr> = ch.iter().map(|c| diff(c, s)).collect();
            Expr::add_slice(&parts)
        }
        Node::Mul(ch) => {
            let mut parts = Vec::new();
            for (i, c) in ch.iter().enumerate() {
                if !c.contains_symbol(s) {
                    continue;
                }
                let mut factors: Vec<Expr> = Vec::with_capacity(ch.len());
                for (j, other) in ch.iter().enumerate() {
                    if i == j {
                        factors.push(diff(other, s));
                    } else {
                        factors.push(other.clone());
                    }
                }
                parts.push(Expr::mul_slice(&factors));
            }
            Expr::add_slice(&parts)
        }
        Node::Pow(b, r) => {
            let down = Expr::powr(b, r - &Rational::one());
            Expr::mul_slice(&[Expr::num(r.clone()), down, diff(b, s)])
        }
        Node::Fun(f, a) => {
            let da = diff(a, s);
            let outer = match f {
                Fun::Exp => e.clone(),
                Fun::Log => Expr::powr(a, rat(-1)),
                Fun::Sin => Expr::fun(Fun::Cos, a.clone()),
                Fun::Cos => Expr::fun(Fun::Sin, a.clone()).neg(),
            };
            Expr::mul2(&outer, &da)
        }
    }
}

/// Simultaneous substitution of symbols by expressions.
///
/// All replacements happen in one pass over the original expression, so
/// bindings never feed each other; a binding whose value mentions another
/// bound symbol (directly or through a chain) is rejected as a cycle to keep
/// "simultaneous" and "iterated" semantics from silently diverging.
pub fn substitute(e: &Expr, bindings: &BTreeMap<Symbol, Expr>) -> Result<Expr, CoreError> {
    for (key, value) in bindings {
        let mut stack: Vec<&Symbol> = value
            .symbols()
            .iter()
            .filter(|s| bindings.contains_key(*s))
            .map(|s| key_ref(bindings, s))
            .collect();
        let mut seen: BTreeSet<&Symbol> = stack.iter().copied().collect();
        while let Some(s) = stack.pop() {
            if s == key {
                return Err(CoreError::SubstitutionCycle(
                    alloc::string::ToString::to_string(key.name()),
                ));
            }
            let next = &bindings[s];
            for dep in next.symbols() {
                if let Some(dep_key) = bindings.get_key_value(&dep) {
                    if seen.insert(dep_key.0) {
                        stack.push(dep_key.0);
                    }
                }
            }
        }
    }
    Ok(apply_substitution(e, bindings))
}

fn key_ref<'a>(bindings: &'a BTreeMap<Symbol, Expr>, s: &Symbol) -> &'a Symbol {
    bindings.get_key_value(s).expect("filtered to keys").0
}

fn apply_substitution(e: &Expr, bindings: &BTreeMap<Symbol, Expr>) -> Expr {
    match e.node() {
        Node::Num(_) => e.clone(),
        Node::Sym(s) => bindings.get(s).cloned().unwrap_or_else(|| e.clone()),
        Node::Add(ch) => {
            let parts: Vec<Expr> = ch.iter().map(|c| apply_substitution(c, bindings)).collect();
            Expr::add_slice(&parts)
        }
        Node::Mul(ch) => {
            let parts: Vec<Expr> = ch.iter().map(|c| apply_substitution(c, bindings)).collect();
            Expr::mul_slice(&parts)
        }
        Node::Pow(b, r) => Expr::powr(&apply_substitution(b, bindings), r.clone()),
        Node::Fun(f, a) => Expr::fun(*f, apply_substitution(a, bindings)),
    }
}

/// Substitute a single symbol.
pub fn substitute_symbol(e: &Expr, s: &Symbol, value: &Expr) -> Result<Expr, CoreError> {
    let mut map = BTreeMap::new();
    map.insert(s.clone(), value.clone());
    substitute(e, &map)
}

/// Time-advance partial derivative: the explicit time partial plus the
/// advancement of every gauge-function derivative one order up
/// (`d/dt eps -> epsdot`, and so on).  Free parameters and other symbols are
/// held constant; vector fields account for their drift separately.
pub fn partial_time(e: &Expr, table: &SymbolTable) -> Expr {
    let mut parts = vec![diff(e, &table.time())];
    for s in e.symbols() {
        if s.kind() == SymbolKind::GaugeDerivative {
            let advanced = s.gauge_next().expect("gauge symbols advance");
            parts.push(Expr::mul2(&Expr::sym(advanced), &diff(e, &s)));
        }
    }
    Expr::add_slice(&parts)
}

/// Coefficients of `e` viewed as a polynomial in `s`: index is the power.
///
/// `None` when `s` appears other than polynomially: inside a function
/// argument, inside a composite power base, or with a negative or fractional
/// exponent.
pub fn poly_coefficients(e: &Expr, s: &Symbol) -> Option<Vec<Expr>> {
    if !e.contains_symbol(s) {
        return Some(vec![e.clone()]);
    }
    match e.node() {
        Node::Sym(_) => Some(vec![Expr::zero(), Expr::one()]),
        Node::Add(ch) => {
            let mut out: Vec<Expr> = Vec::new();
            for c in ch {
                let part = poly_coefficients(c, s)?;
                if part.len() > out.len() {
                    out.resize(part.len(), Expr::zero());
                }
                for (k, p) in part.into_iter().enumerate() {
                    out[k] = Expr::add2(&out[k], &p);
                }
            }
            Some(out)
        }
        Node::Mul(ch) => {
            let mut degree = 0usize;
            let mut coeff_factors: Vec<Expr> = Vec::new();
            for f in ch {
                if !f.contains_symbol(s) {
                    coeff_factors.push(f.clone());
                    continue;
                }
                match f.node() {
                    Node::Sym(_) => degree += 1,
                    Node::Pow(b, r) if b.as_symbol() == Some(s) => {
                        if !r.is_integer() || !r.is_positive() {
                            return None;
                        }
                        degree += r.to_integer().to_usize()?;
                    }
                    _ => return None,
                }
            }
            let coeff = Expr::mul_slice(&coeff_factors);
            let mut out = vec![Expr::zero(); degree + 1];
            out[degree] = coeff;
            Some(out)
        }
        Node::Pow(b, r) => {
            if b.as_symbol() == Some(s) && r.is_integer() && r.is_positive() {
                let degree = r.to_integer().to_usize()?;
                let mut out = vec![Expr::zero(); degree + 1];
                out[degree] = Expr::one();
                Some(out)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Affine decomposition `e = constant + sum(coeff_i * s_i)` with coefficients
/// free of every `s_i`; `None` if `e` is not of that shape.
pub fn linear_parts(e: &Expr, syms: &[Symbol]) -> Option<(Expr, Vec<Expr>)> {
    let zeroed: BTreeMap<Symbol, Expr> = syms.iter().map(|s| (s.clone(), Expr::zero())).collect();
    let constant = substitute(e, &zeroed).ok()?;
    let mut coeffs = Vec::with_capacity(syms.len());
    for s in syms {
        let d = diff(e, s);
        if syms.iter().any(|other| d.contains_symbol(other)) {
            return None;
        }
        coeffs.push(d);
    }
    // reconstruction check: the decomposition must be exact
    let mut rebuilt = vec![constant.clone()];
    for (s, c) in syms.iter().zip(coeffs.iter()) {
        rebuilt.push(Expr::mul2(c, &Expr::sym(s.clone())));
    }
    let difference = Expr::sub(e, &Expr::add_slice(&rebuilt));
    if difference.is_zero() {
        Some((constant, coeffs))
    } else {
        None
    }
}
