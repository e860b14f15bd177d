//! The map from velocity space to phase space defined by the conjugate
//! momenta, together with everything the map carries when it is not
//! invertible: the primary constraints cutting out its image, a Hamiltonian
//! on that image, kernel directions aligned with the constraints, and the
//! velocity functions that recover the missing evolution directions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::calculus::{diff, poly_coefficients, substitute, substitute_symbol};
use crate::error::CoreError;
use crate::expr::Expr;
use crate::linalg::{provably_nonvanishing, solve_linear, RankWarning, SymMatrix};
use crate::model::SystemModel;
use crate::symbol::{Symbol, SymbolKind, SymbolTable};

/// Momentum map of a (possibly degenerate) Lagrangian system, with the
/// derived phase-space data.
#[derive(Clone, Debug)]
pub struct LegendreMap {
    table: SymbolTable,
    momentum_values: Vec<Expr>,
    inversions: BTreeMap<Symbol, Expr>,
    unsolved_velocities: Vec<Symbol>,
    primary_constraints: Vec<Expr>,
    hamiltonian: Expr,
    v_multipliers: Vec<Expr>,
    gamma: Vec<Vec<Expr>>,
    warnings: Vec<RankWarning>,
}

impl LegendreMap {
    /// Derive constraints and Hamiltonian from the model alone.
    pub fn build(model: &SystemModel) -> Result<Self, CoreError> {
        Self::build_with(model, None, None)
    }

    /// Build the map, taking the primary constraints and the Hamiltonian
    /// from the caller when supplied. Caller-supplied data is verified, not
    /// trusted: constraints must pull back to zero, be independent, and
    /// match the Hessian kernel in number; the Hamiltonian must pull back
    /// to the energy.
    pub fn build_with(
        model: &SystemModel,
        constraints: Option<&[Expr]>,
        hamiltonian: Option<&Expr>,
    ) -> Result<Self, CoreError> {
        let table = model.table().clone();
        let n = table.dim();
        let momentum_values = model.momenta().to_vec();
        let momentum_syms = table.momenta().to_vec();
        let velocity_syms = table.velocities().to_vec();

        // Greedy triangular inversion of p_i = momentum_values[i]: pick any
        // remaining equation that is affine in a remaining velocity with a
        // provably nonvanishing coefficient, solve, and keep every stored
        // value reduced against the solved set.
        let mut equations: Vec<Expr> = momentum_syms
            .iter()
            .zip(&momentum_values)
            .map(|(p, value)| Expr::sub(&Expr::sym(p.clone()), value))
            .collect();
        let mut inversions: BTreeMap<Symbol, Expr> = BTreeMap::new();
        let mut row_open: Vec<bool> = alloc::vec![true; n];
        loop {
            let mut advanced = false;
            'rows: for i in 0..n {
                if !row_open[i] {
                    continue;
                }
                let reduced = substitute(&equations[i], &inversions)?;
                for v in &velocity_syms {
                    if inversions.contains_key(v) {
                        continue;
                    }
                    let Some(coeffs) = poly_coefficients(&reduced, v) else {
                        continue;
                    };
                    if coeffs.len() != 2 || !provably_nonvanishing(&coeffs[1]) {
                        continue;
                    }
                    let value = Expr::div(&Expr::neg(&coeffs[0]), &coeffs[1]);
                    let solved: Vec<(Symbol, Expr)> = inversions
                        .iter()
                        .map(|(k, old)| substitute_symbol(old, v, &value).map(|e| (k.clone(), e)))
                        .collect::<Result<_, _>>()?;
                    inversions = solved.into_iter().collect();
                    inversions.insert(v.clone(), value);
                    row_open[i] = false;
                    advanced = true;
                    continue 'rows;
                }
            }
            if !advanced {
                break;
            }
        }
        let unsolved_velocities: Vec<Symbol> = velocity_syms
            .iter()
            .filter(|v| !inversions.contains_key(v))
            .cloned()
            .collect();

        // Rows that did not yield a velocity become conditions on (q, p):
        // the constraints cutting out the image of the momentum map.
        let mut derived_constraints: Vec<Expr> = Vec::new();
        for i in 0..n {
            if !row_open[i] {
                continue;
            }
            let residual = substitute(&equations[i], &inversions)?;
            if residual.is_zero() {
                continue;
            }
            for s in residual.symbols() {
                if matches!(s.kind(), SymbolKind::Velocity) {
                    return Err(CoreError::EliminationFailed(format!(
                        "momentum relation for {} still involves {} but is not affine in it",
                        momentum_syms[i].name(),
                        s.name()
                    )));
                }
            }
            derived_constraints.push(residual);
        }
        equations.clear();

        let mut warnings: Vec<RankWarning> = Vec::new();
        let primary_constraints: Vec<Expr> = match constraints {
            Some(user) => user.to_vec(),
            None => derived_constraints,
        };
        let kernel_dim = model.kernel().len();
        if primary_constraints.len() != kernel_dim {
            return Err(CoreError::Verification(format!(
                "{} primary constraints for a Hessian kernel of dimension {}",
                primary_constraints.len(),
                kernel_dim
            )));
        }

        let pull = |e: &Expr| -> Result<Expr, CoreError> {
            pull_back_impl(e, &momentum_syms, &momentum_values)
        };
        for phi in &primary_constraints {
            check_phase_space(phi, "primary constraint")?;
            if !pull(phi)?.is_zero() {
                return Err(CoreError::Verification(format!(
                    "primary constraint {} does not vanish under the momentum substitution",
                    phi
                )));
            }
        }
        // functional independence: the constraint Jacobian over (q, p) must
        // have full row rank
        if !primary_constraints.is_empty() {
            let mut jac = SymMatrix::zero(primary_constraints.len(), 2 * n);
            for (r, phi) in primary_constraints.iter().enumerate() {
                for (c, q) in table.coordinates().iter().enumerate() {
                    jac.set(r, c, diff(phi, q));
                }
                for (c, p) in momentum_syms.iter().enumerate() {
                    jac.set(r, n + c, diff(phi, p));
                }
            }
            let (rank, mut w) = jac.rank();
            warnings.append(&mut w);
            if rank != primary_constraints.len() {
                return Err(CoreError::Verification(
                    "primary constraints are not functionally independent".to_string(),
                ));
            }
        }

        // energy, then its phase-space representative
        let kinetic: Vec<Expr> = momentum_values
            .iter()
            .zip(&velocity_syms)
            .map(|(value, v)| Expr::mul2(value, &Expr::sym(v.clone())))
            .collect();
        let energy = Expr::sub(&Expr::add_slice(&kinetic), model.lagrangian());
        let projected_energy = substitute(&energy, &inversions)?;
        let hamiltonian = match hamiltonian {
            Some(h) => {
                check_phase_space(h, "Hamiltonian")?;
                if !Expr::sub(&pull(h)?, &energy).is_zero() {
                    return Err(CoreError::Verification(
                        "Hamiltonian does not pull back to the energy".to_string(),
                    ));
                }
                h.clone()
            }
            None => {
                for s in projected_energy.symbols() {
                    if matches!(s.kind(), SymbolKind::Velocity) {
                        return Err(CoreError::Verification(format!(
                            "energy does not project to phase space: {} survives",
                            s.name()
                        )));
                    }
                }
                projected_energy
            }
        };

        // kernel basis aligned with the constraints: momentum gradients of
        // the constraints, pulled back to velocity space
        let gamma: Vec<Vec<Expr>> = primary_constraints
            .iter()
            .map(|phi| {
                momentum_syms
                    .iter()
                    .map(|p| pull(&diff(phi, p)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        for (mu, g) in gamma.iter().enumerate() {
            for i in 0..n {
                let row: Vec<Expr> = (0..n)
                    .map(|j| Expr::mul2(model.hessian().get(i, j), &g[j]))
                    .collect();
                if !Expr::add_slice(&row).is_zero() {
                    return Err(CoreError::Verification(format!(
                        "aligned kernel vector {} is not annihilated by the Hessian",
                        mu
                    )));
                }
            }
        }
        if !gamma.is_empty() {
            let rows: Vec<Vec<Expr>> = gamma.clone();
            let (rank, mut w) = SymMatrix::from_rows(rows).rank();
            warnings.append(&mut w);
            if rank != gamma.len() {
                return Err(CoreError::Verification(
                    "aligned kernel vectors are linearly dependent".to_string(),
                ));
            }
        }

        // velocities not recovered by the inversion are carried by the
        // kernel: qdot^i = (dH/dp_i after the momentum substitution) plus a
        // combination of aligned kernel vectors, and the combination
        // coefficients are the velocity multipliers
        let mut g_matrix = SymMatrix::zero(n, gamma.len());
        for (mu, g) in gamma.iter().enumerate() {
            for i in 0..n {
                g_matrix.set(i, mu, g[i].clone());
            }
        }
        let rhs: Vec<Expr> = velocity_syms
            .iter()
            .zip(&momentum_syms)
            .map(|(v, p)| {
                pull(&diff(&hamiltonian, p)).map(|h_vel| Expr::sub(&Expr::sym(v.clone()), &h_vel))
            })
            .collect::<Result<_, _>>()?;
        let solution = solve_linear(&g_matrix, &rhs, |_| false).map_err(|_| {
            CoreError::Verification(
                "velocity field is not spanned by the Hamiltonian flow and the kernel".to_string(),
            )
        })?;
        if !solution.homogeneous.is_empty() {
            return Err(CoreError::Verification(
                "velocity multipliers are not unique".to_string(),
            ));
        }
        warnings.extend(solution.warnings);
        let v_multipliers = solution.particular;

        Ok(LegendreMap {
            table,
            momentum_values,
            inversions,
            unsolved_velocities,
            primary_constraints,
            hamiltonian,
            v_multipliers,
            gamma,
            warnings,
        })
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    /// Velocity expressions recovered from the momentum relations, keyed by
    /// velocity symbol; values depend on coordinates, momenta, and the
    /// unsolved velocities only.
    pub fn inversions(&self) -> &BTreeMap<Symbol, Expr> {
        &self.inversions
    }

    /// Velocities the momentum relations leave undetermined, in coordinate
    /// order.
    pub fn unsolved_velocities(&self) -> &[Symbol] {
        &self.unsolved_velocities
    }

    pub fn primary_constraints(&self) -> &[Expr] {
        &self.primary_constraints
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    /// Velocity-space coefficients expressing the undetermined part of the
    /// velocity field over the aligned kernel basis, one per constraint.
    pub fn v_multipliers(&self) -> &[Expr] {
        &self.v_multipliers
    }

    /// Kernel basis aligned with the constraints: entry `i` of vector `mu`
    /// is the momentum gradient of constraint `mu`, pulled back.
    pub fn gamma(&self) -> &[Vec<Expr>] {
        &self.gamma
    }

    pub fn warnings(&self) -> &[RankWarning] {
        &self.warnings
    }

    /// Pull a phase-space function back to velocity space by substituting
    /// the momentum values. The input must not contain velocities or
    /// accelerations.
    pub fn pull_back(&self, e: &Expr) -> Result<Expr, CoreError> {
        pull_back_impl(e, self.table.momenta(), &self.momentum_values)
    }

    /// Phase-space representative of a velocity-space function, if the
    /// inversions eliminate every velocity from it; `None` when some
    /// undetermined velocity survives.
    pub fn try_project(&self, e: &Expr) -> Result<Option<Expr>, CoreError> {
        for s in e.symbols() {
            if matches!(s.kind(), SymbolKind::Momentum | SymbolKind::Acceleration) {
                return Err(CoreError::ForbiddenSymbol {
                    symbol: s.name().to_string(),
                    context: "projection acts on velocity-space functions",
                });
            }
        }
        let image = substitute(e, &self.inversions)?;
        for s in image.symbols() {
            if matches!(s.kind(), SymbolKind::Velocity) {
                return Ok(None);
            }
        }
        Ok(Some(image))
    }

    /// Like `try_project`, but a surviving velocity is an error.
    pub fn project(&self, e: &Expr) -> Result<Expr, CoreError> {
        self.try_project(e)?.ok_or_else(|| {
            CoreError::Verification(format!("{} has no phase-space representative", e))
        })
    }
}

fn pull_back_impl(
    e: &Expr,
    momentum_syms: &[Symbol],
    momentum_values: &[Expr],
) -> Result<Expr, CoreError> {
    check_phase_space(e, "pull-back input")?;
    let bindings: BTreeMap<Symbol, Expr> = momentum_syms
        .iter()
        .cloned()
        .zip(momentum_values.iter().cloned())
        .collect();
    substitute(e, &bindings)
}

fn check_phase_space(e: &Expr, context: &'static str) -> Result<(), CoreError> {
    for s in e.symbols() {
        if matches!(s.kind(), SymbolKind::Velocity | SymbolKind::Acceleration) {
            return Err(CoreError::ForbiddenSymbol {
                symbol: s.name().to_string(),
                context,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemModel;
    use crate::parse::parse_expr;
    use crate::symbol::SymbolTableBuilder;

    fn relativistic() -> (SystemModel, LegendreMap) {
        let t = SymbolTableBuilder::new()
            .coordinate("x")
            .coordinate("w")
            .parameter("m")
            .gauge_function("eps")
            .build()
            .unwrap();
        let l = parse_expr("1/2*exp(-w)*xdot^2 + 1/2*exp(w)*m^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        (model, map)
    }

    #[test]
    fn degenerate_map_yields_constraint_hamiltonian_and_multiplier() {
        let (_, map) = relativistic();
        let t = map.table().clone();
        assert_eq!(map.primary_constraints().len(), 1);
        let p_w = Expr::sym(t.resolve("p_w").unwrap());
        assert!(Expr::sub(&map.primary_constraints()[0], &p_w).is_zero());
        let h = parse_expr("1/2*exp(w)*(p_x^2 - m^2)", &t).unwrap();
        assert!(Expr::sub(map.hamiltonian(), &h).is_zero());
        let xdot = t.resolve("xdot").unwrap();
        let wdot = t.resolve("wdot").unwrap();
        assert_eq!(map.unsolved_velocities(), &[wdot.clone()]);
        let inv = map.inversions().get(&xdot).unwrap();
        assert!(Expr::sub(inv, &parse_expr("exp(w)*p_x", &t).unwrap()).is_zero());
        assert_eq!(map.gamma(), &[vec![Expr::zero(), Expr::one()]]);
        assert_eq!(map.v_multipliers().len(), 1);
        assert!(Expr::sub(&map.v_multipliers()[0], &Expr::sym(wdot)).is_zero());
        assert!(map.warnings().is_empty());
    }

    #[test]
    fn pull_back_and_projection_are_mutually_consistent() {
        let (_, map) = relativistic();
        let t = map.table().clone();
        // the Hamiltonian pulls back to the energy
        let energy = parse_expr("1/2*exp(-w)*xdot^2 - 1/2*exp(w)*m^2", &t).unwrap();
        let pulled = map.pull_back(map.hamiltonian()).unwrap();
        assert!(Expr::sub(&pulled, &energy).is_zero());
        // projection inverts pull-back on solvable directions
        let vel = parse_expr("exp(-w)*eps*xdot", &t).unwrap();
        let phase = map.project(&vel).unwrap();
        assert!(Expr::sub(&phase, &parse_expr("eps*p_x", &t).unwrap()).is_zero());
        assert!(Expr::sub(&map.pull_back(&phase).unwrap(), &vel).is_zero());
        // the undetermined velocity has no representative
        let wdot = Expr::sym(t.resolve("wdot").unwrap());
        assert!(map.try_project(&wdot).unwrap().is_none());
        assert!(map.project(&wdot).is_err());
        // inputs from the wrong space are rejected
        assert!(map
            .pull_back(&Expr::sym(t.resolve("xdot").unwrap()))
            .is_err());
        assert!(map.project(&Expr::sym(t.resolve("p_x").unwrap())).is_err());
    }

    #[test]
    fn supplied_data_is_verified_not_trusted() {
        let (model, _) = relativistic();
        let t = model.table().clone();
        let phi = parse_expr("p_w", &t).unwrap();
        let h = parse_expr("1/2*exp(w)*(p_x^2 - m^2)", &t).unwrap();
        // correct data is accepted
        let ok = LegendreMap::build_with(&model, Some(&[phi.clone()]), Some(&h)).unwrap();
        assert!(Expr::sub(ok.hamiltonian(), &h).is_zero());
        // a rescaled constraint is still a valid presentation, with the
        // multiplier rescaled to compensate
        let phi2 = parse_expr("2*p_w", &t).unwrap();
        let rescaled = LegendreMap::build_with(&model, Some(&[phi2]), None).unwrap();
        let half_wdot = parse_expr("1/2*wdot", &t).unwrap();
        assert!(Expr::sub(&rescaled.v_multipliers()[0], &half_wdot).is_zero());
        // a function that is not identically zero on the image is rejected
        let bad_phi = parse_expr("p_x", &t).unwrap();
        assert!(LegendreMap::build_with(&model, Some(&[bad_phi]), None).is_err());
        // a Hamiltonian that does not pull back to the energy is rejected
        let bad_h = parse_expr("p_x^2", &t).unwrap();
        assert!(LegendreMap::build_with(&model, None, Some(&bad_h)).is_err());
        // wrong constraint count is rejected
        assert!(LegendreMap::build_with(&model, Some(&[]), None).is_err());
    }

    #[test]
    fn oscillator_with_an_auxiliary_coordinate() {
        let t = SymbolTableBuilder::new()
            .coordinate("x")
            .coordinate("y")
            .gauge_function("eps")
            .build()
            .unwrap();
        let l = parse_expr("1/2*xdot^2 - 1/2*y^2", &t).unwrap();
        let model = SystemModel::new(t.clone(), l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        let p_y = Expr::sym(t.resolve("p_y").unwrap());
        assert_eq!(map.primary_constraints().len(), 1);
        assert!(Expr::sub(&map.primary_constraints()[0], &p_y).is_zero());
        let h = parse_expr("1/2*p_x^2 + 1/2*y^2", &t).unwrap();
        assert!(Expr::sub(map.hamiltonian(), &h).is_zero());
        let ydot = t.resolve("ydot").unwrap();
        assert!(Expr::sub(&map.v_multipliers()[0], &Expr::sym(ydot)).is_zero());
    }

    #[test]
    fn regular_systems_invert_completely() {
        let t = SymbolTableBuilder::new().coordinate("q").build().unwrap();
        let l = parse_expr("1/2*qdot^2", &t).unwrap();
        let model = SystemModel::new(t.clone(), l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        assert!(map.primary_constraints().is_empty());
        assert!(map.unsolved_velocities().is_empty());
        assert!(map.v_multipliers().is_empty());
        let h = parse_expr("1/2*p_q^2", &t).unwrap();
        assert!(Expr::sub(map.hamiltonian(), &h).is_zero());
    }
}
