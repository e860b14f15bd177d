//! Property tests for the expression kernel: the printer/parser pair, the
//! algebraic laws of the canonical form, and symbolic differentiation against
//! central finite differences.

use noether_core::calculus::diff;
use noether_core::expr::{rat, ratio, Expr, Fun, Node};
use noether_core::numeric::{eval, sample_value};
use noether_core::parse::parse_expr;
use noether_core::symbol::{Symbol, SymbolTable, SymbolTableBuilder};
use proptest::prelude::*;

fn table() -> SymbolTable {
    SymbolTableBuilder::new()
        .coordinate("x")
        .coordinate("y")
        .coordinate("w")
        .parameter("m")
        .gauge_function("eps")
        .build()
        .unwrap()
}

fn symbol_pool(t: &SymbolTable) -> Vec<Expr> {
    let mut pool: Vec<Expr> = Vec::new();
    pool.push(Expr::sym(t.time()));
    for c in t.coordinates() {
        pool.push(Expr::sym(c.clone()));
    }
    for v in t.velocities() {
        pool.push(Expr::sym(v.clone()));
    }
    for p in t.parameters() {
        pool.push(Expr::sym(p.clone()));
    }
    pool.push(Expr::sym(t.resolve("eps").unwrap()));
    pool.push(Expr::sym(t.resolve("epsdot").unwrap()));
    pool
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let pool = symbol_pool(&table());
    let n = pool.len();
    let leaf = prop_oneof![
        (-4i64..5).prop_map(Expr::int),
        (-6i64..7, 1i64..5).prop_map(|(a, b)| Expr::num(ratio(a, b))),
        (0..n).prop_map(move |i| pool[i].clone()),
    ];
    leaf.prop_recursive(4, 48, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(|v| Expr::add_slice(&v)),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|v| Expr::mul_slice(&v)),
            (inner.clone(), -2i64..4).prop_map(|(e, k)| {
                if e.is_literal_zero() && k <= 0 {
                    e
                } else {
                    Expr::powr(&e, rat(k))
                }
            }),
            (inner.clone(), 0u8..4).prop_map(|(e, which)| {
                let f = match which {
                    0 => Fun::Exp,
                    1 => Fun::Log,
                    2 => Fun::Sin,
                    _ => Fun::Cos,
                };
                Expr::fun(f, e)
            }),
            inner.clone().prop_map(|e| {
                if e.is_literal_zero() {
                    e
                } else {
                    Expr::sqrt(&e)
                }
            }),
        ]
    })
}

/// Rebuild an expression bottom-up through the smart constructors; on an
/// already canonical tree this must be the identity.
fn rebuild(e: &Expr) -> Expr {
    match e.node() {
        Node::Num(r) => Expr::num(r.clone()),
        Node::Sym(s) => Expr::sym(s.clone()),
        Node::Add(ch) => {
            let parts: Vec<Expr> = ch.iter().map(rebuild).collect();
            Expr::add_slice(&parts)
        }
        Node::Mul(ch) => {
            let parts: Vec<Expr> = ch.iter().map(rebuild).collect();
            Expr::mul_slice(&parts)
        }
        Node::Pow(b, r) => Expr::powr(&rebuild(b), r.clone()),
        Node::Fun(f, a) => Expr::fun(*f, rebuild(a)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_form_parses_back_to_the_same_expression(e in expr_strategy()) {
        let t = table();
        let text = format!("{e}");
        let back = parse_expr(&text, &t)
            .unwrap_or_else(|err| panic!("reparse of {text:?} failed: {err}"));
        prop_assert_eq!(&back, &e, "round trip changed {} into {}", text, back);
    }

    #[test]
    fn canonicalization_is_idempotent(e in expr_strategy()) {
        prop_assert_eq!(&rebuild(&e), &e);
    }

    #[test]
    fn additive_and_multiplicative_units(e in expr_strategy()) {
        prop_assert_eq!(&Expr::add2(&e, &Expr::zero()), &e);
        prop_assert_eq!(&Expr::mul2(&e, &Expr::one()), &e);
        prop_assert!(Expr::sub(&e, &e).is_literal_zero());
        let doubled = Expr::add2(&e, &e);
        prop_assert!(Expr::sub(&doubled, &Expr::mul2(&Expr::int(2), &e)).is_literal_zero());
    }

    #[test]
    fn product_distributes_exactly(a in expr_strategy(), b in expr_strategy(), c in expr_strategy()) {
        let left = Expr::mul2(&a, &Expr::add2(&b, &c));
        let right = Expr::add2(&Expr::mul2(&a, &b), &Expr::mul2(&a, &c));
        prop_assert!(Expr::sub(&left, &right).is_zero());
    }

    #[test]
    fn derivative_matches_finite_differences(e in expr_strategy(), seed in 0u64..1000) {
        let symbols: Vec<Symbol> = e.symbols().into_iter().collect();
        if symbols.is_empty() {
            return Ok(());
        }
        let target = &symbols[0];
        let d = diff(&e, target);
        let h = 1e-6f64;
        let mut checked = 0;
        for point in 0..24u32 {
            let values: std::collections::BTreeMap<Symbol, f64> = symbols
                .iter()
                .map(|s| (s.clone(), sample_value(seed, s.name(), point, 0)))
                .collect();
            let shifted = |delta: f64| {
                let values = values.clone();
                let target = target.clone();
                move |s: &Symbol| {
                    values.get(s).copied().map(|v| {
                        if s == &target {
                            v + delta
                        } else {
                            v
                        }
                    })
                }
            };
            let (fp, fm, fd) = match (
                eval(&e, &shifted(h)),
                eval(&e, &shifted(-h)),
                eval(&d, &shifted(0.0)),
            ) {
                (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                _ => continue,
            };
            // skip badly conditioned samples
            if fp.abs() > 1e6 || fm.abs() > 1e6 || fd.abs() > 1e6 {
                continue;
            }
            let numeric = (fp - fm) / (2.0 * h);
            let scale = 1.0f64.max(fd.abs()).max(numeric.abs());
            prop_assert!(
                (numeric - fd).abs() <= 2e-4 * scale,
                "point {point}: finite difference {numeric} vs symbolic {fd} for d/d{target} of {e}",
            );
            checked += 1;
            if checked >= 6 {
                break;
            }
        }
        // domain failures everywhere are acceptable; disagreement is not
    }
}
