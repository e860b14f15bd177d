//! Constraint chains on phase space and velocity space: reduction of
//! functions modulo a constraint set with exact certificates, the
//! stabilization loop that grows the phase-space chain and determines
//! multipliers, and the velocity-space chain transported through the
//! evolution operator.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::calculus::{
    linear_parts, partial_time, poly_coefficients, substitute, substitute_symbol,
};
use crate::error::CoreError;
use crate::evolution::{poisson_bracket, Evolution, Space};
use crate::expr::Expr;
use crate::legendre::LegendreMap;
use crate::linalg::provably_nonvanishing;
use crate::matching::{collect_generators, match_combination};
use crate::model::SystemModel;
use crate::symbol::{Symbol, SymbolKind, SymbolTable};

/// Which space a constraint set lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Phase-space constraints.
    Hamiltonian,
    /// Velocity-space constraints.
    Lagrangian,
}

impl Side {
    fn space(self) -> Space {
        match self {
            Side::Hamiltonian => Space::Phase,
            Side::Lagrangian => Space::Velocity,
        }
    }
}

/// Result of reducing a function modulo a constraint set: an exact identity
/// `input = normal_form + sum(combination[j] * constraint[j])`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub normal_form: Expr,
    pub combination: Vec<Expr>,
}

#[derive(Clone, Debug)]
struct SolvedForm {
    symbol: Symbol,
    value: Expr,
    coefficient: Expr,
}

/// Leveled chain of constraints on one side, with reduction machinery.
/// Level 0 holds the primary constraints; higher levels are appended by
/// stabilization or transport.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    side: Side,
    table: SymbolTable,
    levels: Vec<Vec<Expr>>,
    solved_forms: Vec<Option<SolvedForm>>,
    ansatz_degree: u32,
}

impl ConstraintSet {
    pub fn new(
        side: Side,
        table: SymbolTable,
        primaries: Vec<Expr>,
        ansatz_degree: u32,
    ) -> Result<Self, CoreError> {
        let mut set = ConstraintSet {
            side,
            table,
            levels: Vec::new(),
            solved_forms: Vec::new(),
            ansatz_degree,
        };
        set.push_level(primaries)?;
        Ok(set)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn levels(&self) -> &[Vec<Expr>] {
        &self.levels
    }

    /// All constraints in level order.
    pub fn flat(&self) -> Vec<&Expr> {
        self.levels.iter().flatten().collect()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Append one level of constraints, deriving solved forms for the new
    /// entries. Empty levels are accepted and occupy no slot.
    pub fn push_level(&mut self, exprs: Vec<Expr>) -> Result<(), CoreError> {
        for e in &exprs {
            check_side(e, self.side, "constraint")?;
        }
        let mut used: alloc::collections::BTreeSet<Symbol> = self
            .solved_forms
            .iter()
            .flatten()
            .map(|sf| sf.symbol.clone())
            .collect();
        for e in &exprs {
            let sf = self.derive_solved_form(e, &used);
            if let Some(sf) = &sf {
                used.insert(sf.symbol.clone());
            }
            self.solved_forms.push(sf);
        }
        if !exprs.is_empty() {
            self.levels.push(exprs);
        }
        Ok(())
    }

    /// A symbol the constraint is affine in with a provably nonvanishing
    /// coefficient, preferring the fiber directions of the side's space.
    fn derive_solved_form(
        &self,
        e: &Expr,
        used: &alloc::collections::BTreeSet<Symbol>,
    ) -> Option<SolvedForm> {
        let fiber: &[Symbol] = match self.side {
            Side::Hamiltonian => self.table.momenta(),
            Side::Lagrangian => self.table.velocities(),
        };
        let candidates = fiber.iter().chain(self.table.coordinates());
        for s in candidates {
            if used.contains(s) || !e.contains_symbol(s) {
                continue;
            }
            let Some(coeffs) = poly_coefficients(e, s) else {
                continue;
            };
            if coeffs.len() != 2 || !provably_nonvanishing(&coeffs[1]) {
                continue;
            }
            let value = Expr::div(&Expr::neg(&coeffs[0]), &coeffs[1]);
            return Some(SolvedForm {
                symbol: s.clone(),
                value,
                coefficient: coeffs[1].clone(),
            });
        }
        None
    }

    /// Reduce `f` modulo the set. Stage one eliminates solved symbols with
    /// exact division certificates; stage two absorbs what remains when it
    /// is a combination of the constraints with polynomial coefficients.
    /// The returned identity is exact, not merely weak.
    pub fn reduce(&self, f: &Expr) -> Result<Reduction, CoreError> {
        check_side(f, self.side, "reduction input")?;
        let flat: Vec<Expr> = self.flat().into_iter().cloned().collect();
        let mut combination = alloc::vec![Expr::zero(); flat.len()];
        let mut current = f.clone();
        for _round in 0..16 {
            let mut changed = false;
            for (j, sf) in self.solved_forms.iter().enumerate() {
                let Some(sf) = sf else { continue };
                if !current.contains_symbol(&sf.symbol) {
                    continue;
                }
                let quotient = match poly_coefficients(&current, &sf.symbol) {
                    Some(coeffs) => {
                        // current = sum a_k s^k; subtracting the value of the
                        // polynomial at s = v leaves a multiple of (s - v),
                        // with quotient sum_{k>=1} a_k sum_{i<k} s^i v^{k-1-i}
                        let s_expr = Expr::sym(sf.symbol.clone());
                        let mut sub_parts = Vec::with_capacity(coeffs.len());
                        let mut quot_parts = Vec::new();
                        for (k, a) in coeffs.iter().enumerate() {
                            sub_parts.push(Expr::mul2(a, &sf.value.powi(k as i64)));
                            for i in 0..k {
                                quot_parts.push(Expr::mul_slice(&[
                                    a.clone(),
                                    s_expr.powi(i as i64),
                                    sf.value.powi((k - 1 - i) as i64),
                                ]));
                            }
                        }
                        current = Expr::add_slice(&sub_parts);
                        // constraint = coefficient * (s - v), so the
                        // certificate divides the quotient by the coefficient
                        Expr::div(&Expr::add_slice(&quot_parts), &sf.coefficient)
                    }
                    None => {
                        // non-polynomial dependence: certify with the formal
                        // inverse of the constraint itself
                        let substituted = substitute_symbol(&current, &sf.symbol, &sf.value)?;
                        let delta = Expr::sub(&current, &substituted);
                        current = substituted;
                        Expr::div(&delta, &flat[j])
                    }
                };
                combination[j] = Expr::add2(&combination[j], &quotient);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        if !current.is_zero() && !flat.is_empty() {
            let sources: Vec<&Expr> = core::iter::once(&current).chain(flat.iter()).collect();
            let space = self.side.space();
            let generators = collect_generators(&sources, |s| space_keeps(space, s.kind()));
            if let Some(found) = match_combination(&current, &flat, &generators, self.ansatz_degree)
            {
                for (j, c) in found.coefficients.iter().enumerate() {
                    combination[j] = Expr::add2(&combination[j], c);
                }
                current = Expr::zero();
            }
        }
        #[cfg(debug_assertions)]
        {
            let mut rebuilt = alloc::vec![current.clone()];
            for (c, phi) in combination.iter().zip(&flat) {
                rebuilt.push(Expr::mul2(c, phi));
            }
            debug_assert!(
                Expr::sub(f, &Expr::add_slice(&rebuilt)).is_zero(),
                "reduction certificate must be exact"
            );
        }
        Ok(Reduction {
            normal_form: current,
            combination,
        })
    }

    pub fn is_weakly_zero(&self, f: &Expr) -> Result<bool, CoreError> {
        Ok(self.reduce(f)?.normal_form.is_zero())
    }

    pub fn weak_equals(&self, a: &Expr, b: &Expr) -> Result<bool, CoreError> {
        self.is_weakly_zero(&Expr::sub(a, b))
    }
}

fn space_keeps(space: Space, kind: SymbolKind) -> bool {
    match space {
        Space::Phase => !matches!(kind, SymbolKind::Velocity | SymbolKind::Acceleration),
        Space::Velocity => !matches!(kind, SymbolKind::Momentum | SymbolKind::Acceleration),
        Space::SecondJet => !matches!(kind, SymbolKind::Momentum),
    }
}

fn check_side(e: &Expr, side: Side, context: &str) -> Result<(), CoreError> {
    for s in e.symbols() {
        if !space_keeps(side.space(), s.kind()) {
            return Err(CoreError::SpaceMismatch(format!(
                "{context} mentions {}, which does not live on the {} side",
                s.name(),
                match side {
                    Side::Hamiltonian => "phase-space",
                    Side::Lagrangian => "velocity-space",
                }
            )));
        }
    }
    Ok(())
}

/// One event in the stabilization loop.
#[derive(Clone, Debug)]
pub struct StabilizationStep {
    /// Level of the constraint whose persistence was examined.
    pub level: usize,
    /// Reduced persistence residue, after substituting multipliers already
    /// determined.
    pub residue: Expr,
    pub outcome: StepOutcome,
}

#[derive(Clone, Debug)]
pub enum StepOutcome {
    /// The residue vanishes weakly for every multiplier choice.
    Stable,
    /// The multiplier-free part survived and joins the next level.
    NewConstraint(Expr),
    /// The residue fixed one multiplier.
    Determined { multiplier: Symbol, value: Expr },
}

/// Outcome of the full stabilization: the final phase-space chain, the
/// multiplier symbols, the values forced on some of them, and the step log.
#[derive(Clone, Debug)]
pub struct Stabilization {
    pub set: ConstraintSet,
    pub multipliers: Vec<Symbol>,
    pub determined: BTreeMap<Symbol, Expr>,
    pub steps: Vec<StabilizationStep>,
}

/// Demand that each constraint persist under the evolution generated by the
/// Hamiltonian plus multiplier combinations of the primary constraints.
/// Residues are reduced modulo the current chain before being split over
/// the multipliers, so weakly vanishing multiplier coefficients never force
/// anything.
pub fn stabilize(
    map: &LegendreMap,
    multipliers: &[Symbol],
    ansatz_degree: u32,
    max_depth: u32,
) -> Result<Stabilization, CoreError> {
    let table = map.table().clone();
    let primaries = map.primary_constraints().to_vec();
    if multipliers.len() != primaries.len() {
        return Err(CoreError::Verification(format!(
            "{} multipliers supplied for {} primary constraints",
            multipliers.len(),
            primaries.len()
        )));
    }
    for m in multipliers {
        if m.kind() != SymbolKind::FreeParameter {
            return Err(CoreError::ForbiddenSymbol {
                symbol: m.name().to_string(),
                context: "stabilization multipliers must be free parameters",
            });
        }
    }
    let hamiltonian = map.hamiltonian().clone();
    let mut set = ConstraintSet::new(
        Side::Hamiltonian,
        table.clone(),
        primaries.clone(),
        ansatz_degree,
    )?;
    let mut determined: BTreeMap<Symbol, Expr> = BTreeMap::new();
    let mut steps: Vec<StabilizationStep> = Vec::new();
    let mut frontier: Vec<(usize, Expr)> = set
        .levels()
        .first()
        .map(|l| l.iter().map(|e| (0usize, e.clone())).collect())
        .unwrap_or_default();
    let mut depth = 0u32;
    while !frontier.is_empty() {
        if depth >= max_depth {
            return Err(CoreError::DepthExceeded(max_depth));
        }
        depth += 1;
        let mut new_level: Vec<Expr> = Vec::new();
        for (level, phi) in core::mem::take(&mut frontier) {
            let mut residue_parts = alloc::vec![
                partial_time(&phi, &table),
                poisson_bracket(&phi, &hamiltonian, &table)?
            ];
            for (lambda, primary) in multipliers.iter().zip(&primaries) {
                residue_parts.push(Expr::mul2(
                    &Expr::sym(lambda.clone()),
                    &poisson_bracket(&phi, primary, &table)?,
                ));
            }
            let mut residue = Expr::add_slice(&residue_parts);
            for _ in 0..=multipliers.len() {
                let next = substitute(&residue, &determined)?;
                if Expr::sub(&next, &residue).is_literal_zero() {
                    break;
                }
                residue = next;
            }
            let residue = set.reduce(&residue)?.normal_form;
            if residue.is_zero() {
                steps.push(StabilizationStep {
                    level,
                    residue,
                    outcome: StepOutcome::Stable,
                });
                continue;
            }
            let Some((constant, coeffs)) = linear_parts(&residue, multipliers) else {
                return Err(CoreError::Inconsistent(format!(
                    "persistence residue {residue} is not affine in the multipliers"
                )));
            };
            let surviving: Vec<usize> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, _)| i)
                .collect();
            if surviving.is_empty() {
                let duplicate = new_level.iter().any(|seen| {
                    Expr::sub(seen, &constant).is_zero()
                        || crate::expr::exact_divide(&constant, seen)
                            .is_some_and(|q| q.as_num().is_some())
                });
                steps.push(StabilizationStep {
                    level,
                    residue: constant.clone(),
                    outcome: StepOutcome::NewConstraint(constant.clone()),
                });
                if !duplicate {
                    new_level.push(constant);
                }
                continue;
            }
            // the residue fixes one multiplier in terms of the others
            let chosen = surviving
                .iter()
                .copied()
                .find(|&i| provably_nonvanishing(&coeffs[i]))
                .unwrap_or(surviving[0]);
            let mut rest = alloc::vec![constant];
            for &i in &surviving {
                if i != chosen {
                    rest.push(Expr::mul2(&coeffs[i], &Expr::sym(multipliers[i].clone())));
                }
            }
            let value = Expr::neg(&Expr::div(&Expr::add_slice(&rest), &coeffs[chosen]));
            determined.insert(multipliers[chosen].clone(), value.clone());
            steps.push(StabilizationStep {
                level,
                residue,
                outcome: StepOutcome::Determined {
                    multiplier: multipliers[chosen].clone(),
                    value,
                },
            });
        }
        if !new_level.is_empty() {
            let level_index = set.levels().len();
            frontier = new_level.iter().map(|e| (level_index, e.clone())).collect();
            set.push_level(new_level)?;
        }
    }
    // determined values may reference multipliers determined later; settle
    // them against each other
    for _ in 0..=multipliers.len() {
        let settled: Vec<(Symbol, Expr)> = determined
            .iter()
            .map(|(k, v)| substitute(v, &determined).map(|e| (k.clone(), e)))
            .collect::<Result<_, _>>()?;
        let next: BTreeMap<Symbol, Expr> = settled.into_iter().collect();
        if next
            .iter()
            .zip(&determined)
            .all(|((_, a), (_, b))| Expr::sub(a, b).is_literal_zero())
        {
            break;
        }
        determined = next;
    }
    Ok(Stabilization {
        set,
        multipliers: multipliers.to_vec(),
        determined,
        steps,
    })
}

/// Transport the phase-space chain to velocity space: level `l` of the
/// result is the evolution operator applied to level `l` of the phase-space
/// chain, dropping images that already vanish weakly. Afterwards every
/// non-primary phase-space constraint is checked to pull back to a weak
/// zero of the result.
pub fn lagrangian_chain(
    model: &SystemModel,
    map: &LegendreMap,
    ham: &ConstraintSet,
    ansatz_degree: u32,
) -> Result<ConstraintSet, CoreError> {
    if ham.side() != Side::Hamiltonian {
        return Err(CoreError::SpaceMismatch(
            "transport starts from a phase-space chain".to_string(),
        ));
    }
    let k = Evolution::new(model, map);
    let mut set = ConstraintSet::new(
        Side::Lagrangian,
        model.table().clone(),
        Vec::new(),
        ansatz_degree,
    )?;
    for level in ham.levels() {
        let mut images = Vec::new();
        for phi in level {
            let image = k.apply(phi)?;
            let interesting = if set.is_empty() {
                !image.is_zero()
            } else {
                !set.is_weakly_zero(&image)?
            };
            let duplicate = images.iter().any(|seen| Expr::sub(seen, &image).is_zero());
            if interesting && !duplicate {
                images.push(image);
            }
        }
        set.push_level(images)?;
    }
    for (l, level) in ham.levels().iter().enumerate().skip(1) {
        for phi in level {
            let pulled = map.pull_back(phi)?;
            if !set.is_weakly_zero(&pulled)? {
                return Err(CoreError::Verification(format!(
                    "level {l} constraint {phi} does not pull back into the velocity-space chain"
                )));
            }
        }
    }
    Ok(set)
}

/// Whether the brackets of `g` with every primary constraint vanish weakly
/// modulo the primary constraints themselves.
pub fn is_first_class_wrt_primaries(
    map: &LegendreMap,
    g: &Expr,
    ansatz_degree: u32,
) -> Result<bool, CoreError> {
    let table = map.table().clone();
    let primaries = ConstraintSet::new(
        Side::Hamiltonian,
        table.clone(),
        map.primary_constraints().to_vec(),
        ansatz_degree,
    )?;
    for phi in map.primary_constraints() {
        let bracket = poisson_bracket(g, phi, &table)?;
        if !primaries.is_weakly_zero(&bracket)? {
            return Ok(false);
        }
    }
    Ok(true)
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

    fn oscillator() -> (SystemModel, LegendreMap) {
        let t = SymbolTableBuilder::new()
            .coordinate("x")
            .coordinate("y")
            .gauge_function("eps")
            .build()
            .unwrap();
        let l = parse_expr("1/2*xdot^2 - 1/2*y^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        (model, map)
    }

    #[test]
    fn reduction_certificates_are_exact_identities() {
        let (_, map) = relativistic();
        let t = map.table().clone();
        let lambda = Symbol::free_parameter("lambda");
        let stab = stabilize(&map, &[lambda], 4, 10).unwrap();
        let set = &stab.set;
        for src in [
            "p_w",
            "exp(w)*p_w^2 + p_x",
            "x*p_w + 1/2*exp(w)*(p_x^2 - m^2)",
            "exp(p_w) - 1",
            "epsdot*p_w*p_x",
        ] {
            let f = parse_expr(src, &t).unwrap();
            let red = set.reduce(&f).unwrap();
            let mut rebuilt = alloc::vec![red.normal_form.clone()];
            for (c, phi) in red.combination.iter().zip(set.flat()) {
                rebuilt.push(Expr::mul2(c, phi));
            }
            assert!(
                Expr::sub(&f, &Expr::add_slice(&rebuilt)).is_zero(),
                "certificate broken for {src}"
            );
        }
        // polynomial dependence on the solved symbol reduces completely
        let f = parse_expr("exp(w)*p_w^2 + p_x", &t).unwrap();
        let red = set.reduce(&f).unwrap();
        assert!(Expr::sub(&red.normal_form, &parse_expr("p_x", &t).unwrap()).is_zero());
        // the non-polynomial fallback still eliminates the symbol
        let g = parse_expr("exp(p_w) - 1", &t).unwrap();
        assert!(set.reduce(&g).unwrap().normal_form.is_zero());
    }

    #[test]
    fn free_multiplier_chain_stops_after_one_new_constraint() {
        let (_, map) = relativistic();
        let t = map.table().clone();
        let lambda = Symbol::free_parameter("lambda");
        let stab = stabilize(&map, &[lambda.clone()], 4, 10).unwrap();
        assert_eq!(stab.set.levels().len(), 2);
        let minus_h = parse_expr("-1/2*exp(w)*(p_x^2 - m^2)", &t).unwrap();
        assert_eq!(stab.set.levels()[1].len(), 1);
        assert!(Expr::sub(&stab.set.levels()[1][0], &minus_h).is_zero());
        // the multiplier survives stabilization
        assert!(stab.determined.is_empty());
        assert_eq!(stab.steps.len(), 2);
        assert!(matches!(
            stab.steps[0].outcome,
            StepOutcome::NewConstraint(_)
        ));
        assert!(matches!(stab.steps[1].outcome, StepOutcome::Stable));
        // the Hamiltonian vanishes weakly on the final surface
        let h = map.hamiltonian();
        assert!(stab.set.is_weakly_zero(h).unwrap());
        assert!(stab
            .set
            .weak_equals(
                &parse_expr("exp(-w)*p_x^2", &t).unwrap(),
                &parse_expr("exp(-w)*m^2", &t).unwrap(),
            )
            .unwrap());
    }

    #[test]
    fn determined_multiplier_chain_terminates_without_new_constraints() {
        let (_, map) = oscillator();
        let t = map.table().clone();
        let lambda = Symbol::free_parameter("lambda");
        let stab = stabilize(&map, &[lambda.clone()], 4, 10).unwrap();
        assert_eq!(stab.set.levels().len(), 2);
        let minus_y = Expr::neg(&Expr::sym(t.resolve("y").unwrap()));
        assert!(Expr::sub(&stab.set.levels()[1][0], &minus_y).is_zero());
        // the second step pins the multiplier to zero
        assert_eq!(stab.determined.len(), 1);
        assert!(stab.determined.get(&lambda).unwrap().is_zero());
    }

    #[test]
    fn transported_chain_matches_hand_values() {
        let (model, map) = relativistic();
        let t = map.table().clone();
        let lambda = Symbol::free_parameter("lambda");
        let stab = stabilize(&map, &[lambda], 4, 10).unwrap();
        let chain = lagrangian_chain(&model, &map, &stab.set, 4).unwrap();
        // one level: the velocity-space constraint; the image of the second
        // phase-space level is already weakly zero
        assert_eq!(chain.levels().len(), 1);
        let chi = parse_expr("1/2*exp(w)*m^2 - 1/2*exp(-w)*xdot^2", &t).unwrap();
        assert_eq!(chain.levels()[0].len(), 1);
        assert!(Expr::sub(&chain.levels()[0][0], &chi).is_zero());
        // wdot * chi is weakly zero but not identically zero
        let wdot = Expr::sym(t.resolve("wdot").unwrap());
        let image = Expr::mul2(&wdot, &chi);
        assert!(!image.is_zero());
        assert!(chain.is_weakly_zero(&image).unwrap());
    }

    #[test]
    fn transported_chain_grows_when_images_are_independent() {
        let (model, map) = oscillator();
        let t = map.table().clone();
        let lambda = Symbol::free_parameter("lambda");
        let stab = stabilize(&map, &[lambda], 4, 10).unwrap();
        let chain = lagrangian_chain(&model, &map, &stab.set, 4).unwrap();
        assert_eq!(chain.levels().len(), 2);
        let minus_y = Expr::neg(&Expr::sym(t.resolve("y").unwrap()));
        let minus_ydot = Expr::neg(&Expr::sym(t.resolve("ydot").unwrap()));
        assert!(Expr::sub(&chain.levels()[0][0], &minus_y).is_zero());
        assert!(Expr::sub(&chain.levels()[1][0], &minus_ydot).is_zero());
    }

    #[test]
    fn first_class_test_distinguishes_generator_from_hamiltonian() {
        let (_, map) = relativistic();
        let t = map.table().clone();
        let g = parse_expr("exp(-w)*epsdot*p_w + 1/2*eps*(p_x^2 - m^2)", &t).unwrap();
        assert!(is_first_class_wrt_primaries(&map, &g, 4).unwrap());
        assert!(!is_first_class_wrt_primaries(&map, map.hamiltonian(), 4).unwrap());
    }

    #[test]
    fn regular_systems_stabilize_trivially() {
        let t = SymbolTableBuilder::new().coordinate("q").build().unwrap();
        let l = parse_expr("1/2*qdot^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        let stab = stabilize(&map, &[], 4, 10).unwrap();
        assert!(stab.set.is_empty());
        assert!(stab.steps.is_empty());
        let chain = lagrangian_chain(&model, &map, &stab.set, 4).unwrap();
        assert!(chain.is_empty());
        // reduction over an empty set is the identity
        let f = parse_expr("p_q^2", &model.table().clone()).unwrap();
        let red = stab.set.reduce(&f).unwrap();
        assert!(Expr::sub(&red.normal_form, &f).is_zero());
        assert!(red.combination.is_empty());
    }
}
