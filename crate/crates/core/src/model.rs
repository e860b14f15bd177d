//! A first-order Lagrangian system and the velocity-space structure derived
//! from it: conjugate momenta, the velocity Hessian and its kernel, and the
//! split of the Euler-Lagrange equations into acceleration and force parts.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::calculus::{diff, partial_time};
use crate::error::CoreError;
use crate::expr::Expr;
use crate::linalg::{solve_linear, LinearSolution, RankWarning, SymMatrix};
use crate::symbol::{SymbolKind, SymbolTable};

/// Lagrangian system over a symbol table, with every quantity that depends
/// only on the Lagrangian computed once at construction.
#[derive(Clone, Debug)]
pub struct SystemModel {
    table: SymbolTable,
    lagrangian: Expr,
    momenta: Vec<Expr>,
    hessian: SymMatrix,
    alpha: Vec<Expr>,
    euler_lagrange: Vec<Expr>,
    kernel: Vec<Vec<Expr>>,
    kernel_warnings: Vec<RankWarning>,
}

impl SystemModel {
    /// Build the model. The Lagrangian must be a function of coordinates,
    /// velocities, and parameters only.
    pub fn new(table: SymbolTable, lagrangian: Expr) -> Result<Self, CoreError> {
        for s in lagrangian.symbols() {
            match s.kind() {
                SymbolKind::Coordinate | SymbolKind::Velocity | SymbolKind::Parameter => {}
                _ => return Err(CoreError::ForbiddenSymbol {
                    symbol: s.name().to_string(),
                    context:
                        "a Lagrangian may depend on coordinates, velocities, and parameters only",
                }),
            }
        }
        let n = table.dim();
        let velocities = table.velocities().to_vec();
        let coordinates = table.coordinates().to_vec();
        let momenta: Vec<Expr> = velocities.iter().map(|v| diff(&lagrangian, v)).collect();
        let mut hessian = SymMatrix::zero(n, n);
        for (i, phat) in momenta.iter().enumerate() {
            for (j, v) in velocities.iter().enumerate() {
                hessian.set(i, j, diff(phat, v));
            }
        }
        // force part of the Euler-Lagrange expression: everything in
        // d/dt(dL/dqdot) - dL/dq that does not multiply an acceleration
        let alpha: Vec<Expr> = momenta
            .iter()
            .zip(&coordinates)
            .map(|(phat, q)| {
                let drag: Vec<Expr> = velocities
                    .iter()
                    .zip(&coordinates)
                    .map(|(vj, qj)| Expr::mul2(&Expr::sym(vj.clone()), &diff(phat, qj)))
                    .collect();
                Expr::sub(&diff(&lagrangian, q), &Expr::add_slice(&drag))
            })
            .collect();
        let accelerations = table.accelerations().to_vec();
        let euler_lagrange: Vec<Expr> = (0..n)
            .map(|i| {
                let acc: Vec<Expr> = (0..n)
                    .map(|j| Expr::mul2(&Expr::sym(accelerations[j].clone()), hessian.get(i, j)))
                    .collect();
                Expr::sub(&alpha[i], &Expr::add_slice(&acc))
            })
            .collect();
        let (kernel, kernel_warnings) = hessian.null_space();
        Ok(SystemModel {
            table,
            lagrangian,
            momenta,
            hessian,
            alpha,
            euler_lagrange,
            kernel,
            kernel_warnings,
        })
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    /// Conjugate momenta as functions on velocity space.
    pub fn momenta(&self) -> &[Expr] {
        &self.momenta
    }

    /// Second velocity derivatives of the Lagrangian.
    pub fn hessian(&self) -> &SymMatrix {
        &self.hessian
    }

    /// Velocity-space force terms: the Euler-Lagrange expressions with the
    /// acceleration part removed.
    pub fn alpha(&self) -> &[Expr] {
        &self.alpha
    }

    /// Euler-Lagrange expressions, linear in the accelerations.
    pub fn euler_lagrange(&self) -> &[Expr] {
        &self.euler_lagrange
    }

    /// Basis of the Hessian kernel (unaligned; one vector per degenerate
    /// direction).
    pub fn kernel(&self) -> &[Vec<Expr>] {
        &self.kernel
    }

    pub fn kernel_warnings(&self) -> &[RankWarning] {
        &self.kernel_warnings
    }

    /// Contractions of the force terms with the kernel: the conditions on
    /// positions and velocities that the Euler-Lagrange equations imply
    /// without involving accelerations.
    pub fn kernel_constraints(&self) -> Vec<Expr> {
        self.kernel
            .iter()
            .map(|gamma| {
                let parts: Vec<Expr> = self
                    .alpha
                    .iter()
                    .zip(gamma)
                    .map(|(a, g)| Expr::mul2(a, g))
                    .collect();
                Expr::add_slice(&parts)
            })
            .collect()
    }

    /// Total time derivative on velocity space: advances explicit time and
    /// gauge functions, then coordinates by velocities and velocities by
    /// accelerations. The input must live on velocity space.
    pub fn total_time_derivative(&self, e: &Expr) -> Result<Expr, CoreError> {
        for s in e.symbols() {
            match s.kind() {
                SymbolKind::Momentum
                | SymbolKind::FreeParameter
                | SymbolKind::OpaqueApplication
                | SymbolKind::Acceleration => {
                    return Err(CoreError::ForbiddenSymbol {
                        symbol: s.name().to_string(),
                        context: "total time derivatives act on velocity-space functions",
                    })
                }
                _ => {}
            }
        }
        let mut out = partial_time(e, &self.table);
        for (q, v) in self.table.coordinates().iter().zip(self.table.velocities()) {
            out = Expr::add2(&out, &Expr::mul2(&Expr::sym(v.clone()), &diff(e, q)));
        }
        for (v, a) in self
            .table
            .velocities()
            .iter()
            .zip(self.table.accelerations())
        {
            out = Expr::add2(&out, &Expr::mul2(&Expr::sym(a.clone()), &diff(e, v)));
        }
        Ok(out)
    }

    /// Solve the Euler-Lagrange system for the accelerations:
    /// `hessian * a = alpha`. Rows whose residual is accepted by
    /// `on_shell_zero` (because it vanishes on the constraint surface) are
    /// dropped; any other inconsistency is an error. The returned solution
    /// carries the undetermined directions as its homogeneous part.
    pub fn solve_accelerations(
        &self,
        on_shell_zero: impl Fn(&Expr) -> bool,
    ) -> Result<LinearSolution, CoreError> {
        solve_linear(&self.hessian, &self.alpha, on_shell_zero)
    }
}
