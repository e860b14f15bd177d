//! Exact linear algebra over symbolic expressions.
//!
//! Elimination over an expression field needs two things plain numeric
//! elimination does not: a pivot must be known to be invertible before we
//! divide by it, and systems arising from degenerate Lagrangians are allowed
//! to shed equations whose residual vanishes on the constraint surface. The
//! first is handled by a conservative sign analysis ([`provably_nonvanishing`])
//! plus explicit [`RankWarning`]s when we divide by something merely nonzero
//! as written; the second by the caller-supplied row-drop predicate of
//! [`solve_linear`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::CoreError;
use crate::expr::{exact_divide, rat, Expr, Fun, Node, Rational};

/// Dense matrix of expressions, row major.
#[derive(Clone, PartialEq, Eq)]
pub struct SymMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl SymMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SymMatrix {
            rows,
            cols,
            data: vec![Expr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Expr::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == width),
            "matrix rows must have equal length"
        );
        SymMatrix {
            rows: height,
            cols: width,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Expr {
        assert!(r < self.rows && c < self.cols, "matrix index out of range");
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, e: Expr) {
        assert!(r < self.rows && c < self.cols, "matrix index out of range");
        self.data[r * self.cols + c] = e;
    }

    pub fn row(&self, r: usize) -> &[Expr] {
        assert!(r < self.rows, "matrix row out of range");
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        SymMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = SymMatrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn mul(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = SymMatrix::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let terms: Vec<Expr> = (0..self.cols)
                    .map(|k| Expr::mul2(self.get(r, k), other.get(k, c)))
                    .collect();
                out.set(r, c, Expr::add_slice(&terms));
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Expr]) -> Vec<Expr> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|r| {
                let terms: Vec<Expr> = (0..self.cols)
                    .map(|c| Expr::mul2(self.get(r, c), &v[c]))
                    .collect();
                Expr::add_slice(&terms)
            })
            .collect()
    }

    /// Rank of the matrix, together with warnings for every pivot that was
    /// assumed nonzero without a proof of nonvanishing.
    pub fn rank(&self) -> (usize, Vec<RankWarning>) {
        let ech = reduced_echelon(self.clone(), self.cols);
        (ech.pivots.len(), ech.warnings)
    }

    /// Basis of the right null space. Vectors are cleared of composite
    /// denominators and normalized: rational content divided out, first
    /// nonzero entry made positive. Deterministic for a given matrix.
    pub fn null_space(&self) -> (Vec<Vec<Expr>>, Vec<RankWarning>) {
        let ech = reduced_echelon(self.clone(), self.cols);
        let mut basis = Vec::new();
        let pivot_of_col: Vec<Option<usize>> = {
            let mut v = vec![None; self.cols];
            for (row, &col) in ech.pivots.iter().enumerate() {
                v[col] = Some(row);
            }
            v
        };
        for free in 0..self.cols {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut vec_out = vec![Expr::zero(); self.cols];
            vec_out[free] = Expr::one();
            for (row, &col) in ech.pivots.iter().enumerate() {
                vec_out[col] = ech.matrix.get(row, free).neg();
            }
            normalize_vector(&mut vec_out);
            basis.push(vec_out);
        }
        (basis, ech.warnings)
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
        }
        write!(f, "]")
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A pivot that elimination divided by without a nonvanishing proof. The
/// result is valid wherever the pivot expression is nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankWarning {
    pub pivot: Expr,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for RankWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pivot at row {}, column {} assumed nonzero: {}",
            self.row, self.col, self.pivot
        )
    }
}

/// Structurally provable sign over all real valuations of the atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sign {
    Pos,
    Neg,
    NonNeg,
    NonPos,
}

impl Sign {
    fn strict(self) -> bool {
        matches!(self, Sign::Pos | Sign::Neg)
    }

    fn negated(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
            Sign::NonNeg => Sign::NonPos,
            Sign::NonPos => Sign::NonNeg,
        }
    }

    fn weakened(self) -> Sign {
        match self {
            Sign::Pos | Sign::NonNeg => Sign::NonNeg,
            Sign::Neg | Sign::NonPos => Sign::NonPos,
        }
    }
}

/// Sign of an expression when one can be established structurally.
/// Exponentials are positive, even powers are nonnegative, and products and
/// sums combine signs conservatively.
fn definite_sign(e: &Expr) -> Option<Sign> {
    match e.node() {
        Node::Num(r) => {
            if r.is_zero() {
                None
            } else if r.is_positive() {
                Some(Sign::Pos)
            } else {
                Some(Sign::Neg)
            }
        }
        Node::Sym(_) => None,
        Node::Fun(Fun::Exp, _) => Some(Sign::Pos),
        Node::Fun(_, _) => None,
        Node::Pow(b, r) => {
            let even_power = r.is_integer() && r.to_integer().is_even();
            match definite_sign(b) {
                Some(Sign::Pos) => Some(Sign::Pos),
                Some(Sign::Neg) => {
                    if r.is_integer() {
                        Some(if even_power { Sign::Pos } else { Sign::Neg })
                    } else {
                        None
                    }
                }
                // a possibly-zero base is only safe under a positive exponent
                Some(s @ (Sign::NonNeg | Sign::NonPos)) if r.is_positive() => {
                    if even_power {
                        Some(Sign::NonNeg)
                    } else if r.is_integer() {
                        Some(s)
                    } else {
                        Some(Sign::NonNeg)
                    }
                }
                None if even_power && r.is_positive() => Some(Sign::NonNeg),
                _ => None,
            }
        }
        Node::Mul(ch) => {
            let mut sign = Sign::Pos;
            for c in ch {
                let s = definite_sign(c)?;
                let flip = matches!(s, Sign::Neg | Sign::NonPos);
                if flip {
                    sign = sign.negated();
                }
                if !s.strict() {
                    sign = sign.weakened();
                }
            }
            Some(sign)
        }
        Node::Add(ch) => {
            let mut sign: Option<Sign> = None;
            for c in ch {
                let s = definite_sign(c)?;
                sign = Some(match sign {
                    None => s,
                    Some(acc) => match (acc.weakened(), s.weakened()) {
                        (Sign::NonNeg, Sign::NonNeg) => {
                            if acc.strict() || s.strict() {
                                Sign::Pos
                            } else {
                                Sign::NonNeg
                            }
                        }
                        (Sign::NonPos, Sign::NonPos) => {
                            if acc.strict() || s.strict() {
                                Sign::Neg
                            } else {
                                Sign::NonPos
                            }
                        }
                        _ => return None,
                    },
                });
            }
            sign
        }
    }
}

/// Whether the expression is provably nonzero for every valuation of its
/// atoms. Conservative: `false` only means "no structural proof".
pub fn provably_nonvanishing(e: &Expr) -> bool {
    matches!(definite_sign(e), Some(s) if s.strict())
}

struct Echelon {
    matrix: SymMatrix,
    /// Column of the pivot in row `i`, for `i < pivots.len()`.
    pivots: Vec<usize>,
    /// Original index of each row after the pivot permutation.
    perm: Vec<usize>,
    warnings: Vec<RankWarning>,
}

/// Divide a row through by its rational content to keep coefficients small.
/// Row scaling by a nonzero rational preserves row equivalence.
fn remove_row_content(m: &mut SymMatrix, row: usize) {
    let mut num_gcd = num_bigint::BigInt::zero();
    let mut den_lcm = num_bigint::BigInt::one();
    for c in 0..m.cols {
        for (_, coeff) in m.get(row, c).rational_terms() {
            num_gcd = num_gcd.gcd(coeff.numer());
            den_lcm = den_lcm.lcm(coeff.denom());
        }
    }
    if num_gcd.is_zero() {
        return;
    }
    let content = Rational::new(num_gcd, den_lcm);
    if content.is_one() {
        return;
    }
    let inv = Expr::num(Rational::one() / content);
    for c in 0..m.cols {
        let scaled = Expr::mul2(m.get(row, c), &inv);
        m.set(row, c, scaled);
    }
}

/// Reduced row echelon form, eliminating only within the first `limit_cols`
/// columns (the remainder ride along, which makes the same routine serve for
/// augmented systems).
///
/// Elimination is fraction-free in the Bareiss style: every row update is
/// `row := (pivot * row - factor * pivot_row) / previous_pivot`, where the
/// division is exact polynomial division in the atom monomials. Dividing by
/// symbolic pivots at every step would nest inverses of ever larger sums;
/// cross-multiplication keeps polynomial entries polynomial, the Bareiss
/// division keeps them the size of minors, and the only true divisions happen
/// in one final normalization pass, so inverse atoms never nest. When the
/// exact division fails (atoms with hidden relations) the undivided row is
/// kept, which only costs size, never correctness.
fn reduced_echelon(mut m: SymMatrix, limit_cols: usize) -> Echelon {
    let mut pivots = Vec::new();
    let mut perm: Vec<usize> = (0..m.rows).collect();
    let mut warnings = Vec::new();
    let mut next_row = 0;
    let mut prev_pivot = Expr::one();
    for col in 0..limit_cols.min(m.cols) {
        // candidate pivot: provably nonvanishing first, then smallest, then
        // earliest row, so elimination is deterministic and prefers scalings
        // that are always invertible
        let mut best: Option<(bool, u32, usize)> = None;
        for r in next_row..m.rows {
            let entry = m.get(r, col);
            if entry.is_zero() {
                continue;
            }
            let key = (!provably_nonvanishing(entry), entry.size(), r);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
        let Some((unproven, _, prow)) = best else {
            continue;
        };
        if prow != next_row {
            for c in 0..m.cols {
                let a = m.get(next_row, c).clone();
                let b = m.get(prow, c).clone();
                m.set(next_row, c, b);
                m.set(prow, c, a);
            }
            perm.swap(next_row, prow);
        }
        let pivot = m.get(next_row, col).clone();
        if unproven {
            warnings.push(RankWarning {
                pivot: pivot.clone(),
                row: perm[next_row],
                col,
            });
        }
        for r in 0..m.rows {
            if r == next_row {
                continue;
            }
            let factor = m.get(r, col).clone();
            let mut updated_row: Vec<Expr> = Vec::with_capacity(m.cols);
            for c in 0..m.cols {
                let updated = Expr::sub(
                    &Expr::mul2(&pivot, m.get(r, c)),
                    &Expr::mul2(&factor, m.get(next_row, c)),
                );
                updated_row.push(updated);
            }
            if !prev_pivot.is_literal_one() {
                // all entries or none: dividing only some would rescale parts
                // of one equation differently
                let divided: Option<Vec<Expr>> = updated_row
                    .iter()
                    .map(|e| exact_divide(e, &prev_pivot))
                    .collect();
                if let Some(d) = divided {
                    updated_row = d;
                }
            }
            for (c, e) in updated_row.into_iter().enumerate() {
                let e = if e.is_zero() { Expr::zero() } else { e };
                m.set(r, c, e);
            }
            m.set(r, col, Expr::zero());
            remove_row_content(&mut m, r);
        }
        prev_pivot = pivot;
        pivots.push(col);
        next_row += 1;
        if next_row == m.rows {
            break;
        }
    }
    // single normalization pass: leading entries become 1
    for (row, &col) in pivots.iter().enumerate() {
        let pivot = m.get(row, col).clone();
        if pivot.is_literal_one() {
            continue;
        }
        let inv = Expr::powr(&pivot, rat(-1));
        for c in 0..m.cols {
            let entry = m.get(row, c);
            if entry.is_zero() {
                m.set(row, c, Expr::zero());
                continue;
            }
            let scaled = Expr::mul2(entry, &inv);
            m.set(row, c, scaled);
        }
        m.set(row, col, Expr::one());
    }
    Echelon {
        matrix: m,
        pivots,
        perm,
        warnings,
    }
}

/// Solution of `m * x = rhs` with a caller policy for inconsistent rows.
#[derive(Clone, Debug)]
pub struct LinearSolution {
    /// One solution, free variables set to zero.
    pub particular: Vec<Expr>,
    /// Basis of the homogeneous solution space.
    pub homogeneous: Vec<Vec<Expr>>,
    /// Original indices of rows whose residual the drop predicate accepted.
    pub dropped_rows: Vec<usize>,
    pub warnings: Vec<RankWarning>,
}

/// Solve the linear system `m * x = rhs` exactly. Rows that reduce to
/// `0 = residual` with a nonzero residual are offered to `drop_row_if`; if it
/// accepts (for instance because the residual vanishes on a constraint
/// surface) the row is discarded and recorded, otherwise the system is
/// reported inconsistent.
pub fn solve_linear(
    m: &SymMatrix,
    rhs: &[Expr],
    drop_row_if: impl Fn(&Expr) -> bool,
) -> Result<LinearSolution, CoreError> {
    assert_eq!(m.rows(), rhs.len(), "system dimension mismatch");
    let mut aug = SymMatrix::zero(m.rows(), m.cols() + 1);
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            aug.set(r, c, m.get(r, c).clone());
        }
        aug.set(r, m.cols(), rhs[r].clone());
    }
    let ech = reduced_echelon(aug, m.cols());
    let mut dropped = Vec::new();
    for r in ech.pivots.len()..m.rows() {
        let residual = ech.matrix.get(r, m.cols());
        if residual.is_zero() {
            continue;
        }
        if drop_row_if(residual) {
            dropped.push(ech.perm[r]);
        } else {
            return Err(CoreError::Inconsistent(format!(
                "no solution: row reduces to 0 = {residual}"
            )));
        }
    }
    dropped.sort_unstable();
    let mut particular = vec![Expr::zero(); m.cols()];
    for (row, &col) in ech.pivots.iter().enumerate() {
        particular[col] = ech.matrix.get(row, m.cols()).clone();
    }
    let (homogeneous, _) = m.null_space();
    Ok(LinearSolution {
        particular,
        homogeneous,
        dropped_rows: dropped,
        warnings: ech.warnings,
    })
}

/// Multiply a vector through by enough factors to remove negative powers and
/// divide out the rational content; flip sign so the first nonzero entry has
/// a positive leading coefficient.
fn normalize_vector(v: &mut [Expr]) {
    // collect the worst negative exponent per base across all terms
    use alloc::collections::BTreeMap;
    let mut needed: BTreeMap<Expr, Rational> = BTreeMap::new();
    for entry in v.iter() {
        for term in entry.terms() {
            for factor in term.factors() {
                if let Node::Pow(b, r) = factor.node() {
                    if r.is_negative() {
                        let need = -r.clone();
                        let slot = needed.entry(b.clone()).or_insert_with(Rational::zero);
                        if *slot < need {
                            *slot = need;
                        }
                    }
                }
            }
        }
    }
    if !needed.is_empty() {
        let factors: Vec<Expr> = needed.into_iter().map(|(b, r)| Expr::powr(&b, r)).collect();
        let multiplier = Expr::mul_slice(&factors);
        for entry in v.iter_mut() {
            let cleared: Vec<Expr> = entry
                .terms()
                .iter()
                .map(|t| Expr::mul2(t, &multiplier))
                .collect();
            *entry = Expr::add_slice(&cleared);
        }
    }
    // rational content: gcd of numerators over lcm of denominators
    let mut num_gcd = num_bigint::BigInt::zero();
    let mut den_lcm = num_bigint::BigInt::one();
    for entry in v.iter() {
        for (_, coeff) in entry.rational_terms() {
            num_gcd = num_gcd.gcd(coeff.numer());
            den_lcm = den_lcm.lcm(coeff.denom());
        }
    }
    if !num_gcd.is_zero() {
        let content = Rational::new(num_gcd, den_lcm);
        if !content.is_one() {
            let inv = Expr::num(Rational::one() / content);
            for entry in v.iter_mut() {
                *entry = Expr::mul2(entry, &inv);
            }
        }
    }
    let flip = v.iter().find(|e| !e.is_zero()).is_some_and(|first| {
        let (coeff, _) = first.terms()[0].coefficient_split();
        coeff.is_negative()
    });
    if flip {
        for entry in v.iter_mut() {
            *entry = entry.neg();
        }
    }
}
