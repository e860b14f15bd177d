//! Expression parser.
//!
//! Grammar: `+ - * /` with the usual precedence, `^` binding tightest and
//! right-associative, unary minus between `^` and `*`, parentheses, decimal
//! and rational literals (decimals become exact rationals), and the function
//! calls `exp`, `log`, `sin`, `cos`, `sqrt` with exactly one argument.
//!
//! Exponents must canonicalize to rational constants: `x^(2*3)` is fine,
//! `x^y` is rejected.  Every identifier must resolve in the supplied symbol
//! table; unknown names report their byte position.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::CoreError;
use crate::expr::{ratio, Expr, Fun, Rational};
use crate::symbol::{Symbol, SymbolTable};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, CoreError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let int_part = &src[start..i];
                let mut value = Rational::new(
                    int_part.parse::<BigInt>().expect("digits parse"),
                    BigInt::from(1),
                );
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return Err(CoreError::Parse {
                            position: i,
                            message: "expected digits after decimal point".to_string(),
                        });
                    }
                    let frac = &src[frac_start..i];
                    let numer = frac.parse::<BigInt>().expect("digits parse");
                    let denom = BigInt::from(10).pow(frac.len() as u32);
                    value += Rational::new(numer, denom);
                }
                toks.push((Tok::Num(value), start));
            }
            b'A'..=b'Z' | b'a'..=b'z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(CoreError::Parse {
                    position: i,
                    message: format!("unexpected character {:?}", b as char),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    table: &'a SymbolTable,
    fallback: Option<&'a dyn Fn(&str) -> Option<Symbol>>,
    end: usize,
}

const BP_ADD: (u8, u8) = (1, 2);
const BP_MUL: (u8, u8) = (3, 4);
const BP_NEG: u8 = 6;
const BP_POW: (u8, u8) = (8, 7);

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_rparen(&mut self) -> Result<(), CoreError> {
        match self.next() {
            Some((Tok::RParen, _)) => Ok(()),
            Some((_, p)) => Err(CoreError::Parse {
                position: p,
                message: "expected closing parenthesis".to_string(),
            }),
            None => Err(CoreError::Parse {
                position: self.end,
                message: "unexpected end of input, expected closing parenthesis".to_string(),
            }),
        }
    }

    fn expr_bp(&mut self, min_bp: u8) -> Result<Expr, CoreError> {
        let mut lhs = self.nud()?;
        loop {
            let (lbp, rbp) = match self.peek() {
                Some(Tok::Plus) | Some(Tok::Minus) => BP_ADD,
                Some(Tok::Star) | Some(Tok::Slash) => BP_MUL,
                Some(Tok::Caret) => BP_POW,
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            let (op, op_pos) = self.next().expect("peeked");
            let rhs = self.expr_bp(rbp)?;
            lhs = match op {
                Tok::Plus => Expr::add2(&lhs, &rhs),
                Tok::Minus => Expr::sub(&lhs, &rhs),
                Tok::Star => Expr::mul2(&lhs, &rhs),
                Tok::Slash => {
                    if rhs.is_literal_zero() {
                        return Err(CoreError::Parse {
                            position: op_pos,
                            message: "division by zero".to_string(),
                        });
                    }
                    Expr::div(&lhs, &rhs)
                }
                Tok::Caret => {
                    let Some(r) = rhs.as_num().cloned() else {
                        return Err(CoreError::Parse {
                            position: op_pos,
                            message: "exponent must be a rational constant".to_string(),
                        });
                    };
                    if lhs.is_literal_zero() && r.is_negative() {
                        return Err(CoreError::Parse {
                            position: op_pos,
                            message: "zero raised to a negative power".to_string(),
                        });
                    }
                    if lhs.is_literal_zero() && r.is_zero() {
                        return Err(CoreError::Parse {
                            position: op_pos,
                            message: "zero raised to the zeroth power".to_string(),
                        });
                    }
                    Expr::powr(&lhs, r)
                }
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn nud(&mut self) -> Result<Expr, CoreError> {
        match self.next() {
            Some((Tok::Num(r), _)) => Ok(Expr::num(r)),
            Some((Tok::Minus, _)) => {
                let inner = self.expr_bp(BP_NEG)?;
                Ok(inner.neg())
            }
            Some((Tok::LParen, _)) => {
                let inner = self.expr_bp(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some((Tok::Ident(name), p)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.next();
                    let arg = self.expr_bp(0)?;
                    if matches!(self.peek(), Some(Tok::Comma)) {
                        return Err(CoreError::Parse {
                            position: self.here(),
                            message: format!("{name} takes exactly one argument"),
                        });
                    }
                    self.expect_rparen()?;
                    return match name.as_str() {
                        "exp" => Ok(Expr::fun(Fun::Exp, arg)),
                        "log" => Ok(Expr::fun(Fun::Log, arg)),
                        "sin" => Ok(Expr::fun(Fun::Sin, arg)),
                        "cos" => Ok(Expr::fun(Fun::Cos, arg)),
                        "sqrt" => Ok(Expr::powr(&arg, ratio(1, 2))),
                        _ => Err(CoreError::Parse {
                            position: p,
                            message: format!("{name} is not a function"),
                        }),
                    };
                }
                match self.table.resolve(&name) {
                    Some(s) => Ok(Expr::sym(s)),
                    None => match self.fallback.and_then(|f| f(&name)) {
                        Some(s) => Ok(Expr::sym(s)),
                        None => Err(CoreError::Undeclared { position: p, name }),
                    },
                }
            }
            Some((t, p)) => Err(CoreError::Parse {
                position: p,
                message: format!("unexpected token {t:?}"),
            }),
            None => Err(CoreError::Parse {
                position: self.end,
                message: "unexpected end of input".to_string(),
            }),
        }
    }
}

/// Parse `src` against the given symbol table.
pub fn parse_expr(src: &str, table: &SymbolTable) -> Result<Expr, CoreError> {
    parse_with(src, table, None)
}

/// Parse `src`, resolving names missing from the table through `fallback`.
/// Lets emitted expressions round-trip when they carry synthetic symbols,
/// such as multiplier parameters and opaque field applications.
pub fn parse_expr_with_fallback(
    src: &str,
    table: &SymbolTable,
    fallback: &dyn Fn(&str) -> Option<Symbol>,
) -> Result<Expr, CoreError> {
    parse_with(src, table, Some(fallback))
}

fn parse_with(
    src: &str,
    table: &SymbolTable,
    fallback: Option<&dyn Fn(&str) -> Option<Symbol>>,
) -> Result<Expr, CoreError> {
    let toks = tokenize(src)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        table,
        fallback,
        end: src.len(),
    };
    let e = parser.expr_bp(0)?;
    if parser.pos < parser.toks.len() {
        let (t, p) = parser.toks[parser.pos].clone();
        return Err(CoreError::Parse {
            position: p,
            message: format!("trailing input starting at {t:?}"),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::SymbolTableBuilder;

    fn table() -> SymbolTable {
        SymbolTableBuilder::new()
            .coordinate("x")
            .coordinate("w")
            .parameter("m")
            .gauge_function("eps")
            .build()
            .unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        let t = table();
        let e = parse_expr("1/2*exp(-w)*xdot^2", &t).unwrap();
        let w = Expr::sym(t.resolve("w").unwrap());
        let xdot = Expr::sym(t.resolve("xdot").unwrap());
        let expected = Expr::mul_slice(&[
            Expr::num(ratio(1, 2)),
            Expr::fun(Fun::Exp, w.neg()),
            xdot.powi(2),
        ]);
        assert_eq!(e, expected);
        // unary minus binds looser than ^: -x^2 is -(x^2)
        let e2 = parse_expr("-x^2 + x^2", &t).unwrap();
        assert!(e2.is_literal_zero());
        // ^ binds tighter than unary minus on the right: x^-1 parses
        let e3 = parse_expr("x^-1 * x", &t).unwrap();
        assert!(e3.is_literal_one());
    }

    #[test]
    fn decimals_become_exact_rationals() {
        let t = table();
        let e = parse_expr("0.125", &t).unwrap();
        assert_eq!(e, Expr::num(ratio(1, 8)));
    }

    #[test]
    fn gauge_chain_names_resolve_dynamically() {
        let t = table();
        for name in ["eps", "epsdot", "epsddot", "eps_d3", "eps_d7"] {
            assert!(parse_expr(name, &t).is_ok(), "{name} should resolve");
        }
    }

    #[test]
    fn undeclared_symbols_error_with_position() {
        let t = table();
        let err = parse_expr("x + q", &t).unwrap_err();
        match err {
            CoreError::Undeclared { position, name } => {
                assert_eq!(position, 4);
                assert_eq!(name, "q");
            }
            other => panic!("expected undeclared error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_symbolic_exponents_and_zero_division() {
        let t = table();
        assert!(matches!(
            parse_expr("x^w", &t),
            Err(CoreError::Parse { .. })
        ));
        assert!(matches!(
            parse_expr("x / 0", &t),
            Err(CoreError::Parse { .. })
        ));
        assert!(matches!(
            parse_expr("x / (1 - 1)", &t),
            Err(CoreError::Parse { .. })
        ));
        assert!(matches!(
            parse_expr("0^(-2)", &t),
            Err(CoreError::Parse { .. })
        ));
    }

    #[test]
    fn function_arity_is_checked() {
        let t = table();
        assert!(matches!(
            parse_expr("sin(x, w)", &t),
            Err(CoreError::Parse { .. })
        ));
        assert!(matches!(
            parse_expr("m(x)", &t),
            Err(CoreError::Parse { .. })
        ));
    }
}
