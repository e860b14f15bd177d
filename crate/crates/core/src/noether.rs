//! Verification and construction of canonical Noether symmetries for
//! possibly singular Lagrangian systems.
//!
//! A phase-space generator G acts through three faces that must agree:
//! its canonical field on phase space, the projected field it induces on
//! velocity space, and the first prolongation of that field. The checks
//! in this module test one generator against the independent
//! characterizations of a symmetry:
//!
//! * the defining image condition: the evolution operator annihilates G
//!   (up to a pure time function, which is reported as a redefinition);
//! * the phase-space conditions: G commutes weakly with the primary
//!   constraints and with the canonical Hamiltonian;
//! * commutation of the induced variations with the evolution operator on
//!   a generating family of phase-space functions;
//! * the velocity-space conditions: the induced field projects through the
//!   Hessian kernel, is tangent to the primary velocity constraints, and
//!   its bracket with the dynamics decomposes into constraint terms plus
//!   kernel directions;
//! * the variational condition: the prolonged variation of the Lagrangian
//!   is the total time derivative of a boundary charge.
//!
//! The module also reconstructs gauge generators from a primary-constraint
//! seed and computes structure functions for families of generators.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use core::fmt;

use crate::calculus::{diff, partial_time};
use crate::constraints::{is_first_class_wrt_primaries, ConstraintSet, Side};
use crate::error::CoreError;
use crate::evolution::{
    bar_extension, hamiltonian_field, kernel_field, lagrangian_field, poisson_bracket, Evolution,
    Space, VectorField,
};
use crate::expr::{ratio, Expr};
use crate::legendre::LegendreMap;
use crate::linalg::{provably_nonvanishing, solve_linear, SymMatrix};
use crate::matching::{
    collect_generators, match_combination, match_rational_combination, monomials,
};
use crate::model::SystemModel;
use crate::numeric::splitmix64;
use crate::symbol::{Symbol, SymbolKind, SymbolTable};

/// Outcome of one symmetry check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// The defining image vanishes weakly, as a combination of primary
    /// velocity-space constraints, but not identically: the generator is a
    /// symmetry of the constrained dynamics that does not project to an
    /// exact one.
    PartialNonprojectable,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::PartialNonprojectable => "PARTIAL-NONPROJECTABLE",
            Verdict::Fail => "FAIL",
        })
    }
}

/// Shared scaffolding for the symmetry checks on one system: the primary
/// constraint chains on both sides, the evolution fields with symbolic
/// multipliers, and the kernel fields.
pub struct NoetherContext<'a> {
    model: &'a SystemModel,
    map: &'a LegendreMap,
    ham_primaries: ConstraintSet,
    lag_primaries: ConstraintSet,
    /// For each primary velocity constraint, the index of the phase-space
    /// primary it is the image of.
    lag_sources: Vec<usize>,
    multipliers: Vec<Symbol>,
    free_accelerations: Vec<Symbol>,
    hamiltonian_flow: VectorField,
    lagrangian_flow: VectorField,
    kernel_fields: Vec<VectorField>,
    ansatz_degree: u32,
    probe_seed: u64,
    probe_count: u32,
}

impl<'a> NoetherContext<'a> {
    pub fn new(model: &'a SystemModel, map: &'a LegendreMap) -> Result<Self, CoreError> {
        Self::with_options(model, map, 4, 0x9e3779b97f4a7c15, 10)
    }

    pub fn with_options(
        model: &'a SystemModel,
        map: &'a LegendreMap,
        ansatz_degree: u32,
        probe_seed: u64,
        probe_count: u32,
    ) -> Result<Self, CoreError> {
        let table = map.table().clone();
        let ham_primaries = ConstraintSet::new(
            Side::Hamiltonian,
            table.clone(),
            map.primary_constraints().to_vec(),
            ansatz_degree,
        )?;
        let k = Evolution::new(model, map);
        let mut primary_images = Vec::new();
        let mut lag_sources = Vec::new();
        for (mu, phi) in map.primary_constraints().iter().enumerate() {
            let image = k.apply(phi)?;
            if image.is_zero() {
                continue;
            }
            if primary_images
                .iter()
                .any(|seen: &Expr| Expr::sub(seen, &image).is_zero())
            {
                continue;
            }
            primary_images.push(image);
            lag_sources.push(mu);
        }
        let lag_primaries = ConstraintSet::new(
            Side::Lagrangian,
            table.clone(),
            primary_images,
            ansatz_degree,
        )?;
        let multipliers = indexed_free_parameters("lambda", map.primary_constraints().len());
        let multiplier_exprs: Vec<Expr> = multipliers.iter().cloned().map(Expr::sym).collect();
        let hamiltonian_flow = hamiltonian_field(map, &multiplier_exprs)?;
        let accel =
            model.solve_accelerations(|r| lag_primaries.is_weakly_zero(r).unwrap_or(false))?;
        let free_accelerations = indexed_free_parameters("eta", accel.homogeneous.len());
        let accelerations: Vec<Expr> = (0..model.dim())
            .map(|i| {
                let mut parts = vec![accel.particular[i].clone()];
                for (s, basis) in free_accelerations.iter().zip(&accel.homogeneous) {
                    parts.push(Expr::mul2(&Expr::sym(s.clone()), &basis[i]));
                }
                Expr::add_slice(&parts)
            })
            .collect();
        let lagrangian_flow = lagrangian_field(model, &accelerations)?;
        let kernel_fields = (0..map.gamma().len())
            .map(|mu| kernel_field(map, mu))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NoetherContext {
            model,
            map,
            ham_primaries,
            lag_primaries,
            lag_sources,
            multipliers,
            free_accelerations,
            hamiltonian_flow,
            lagrangian_flow,
            kernel_fields,
            ansatz_degree,
            probe_seed,
            probe_count,
        })
    }

    pub fn model(&self) -> &SystemModel {
        self.model
    }

    pub fn map(&self) -> &LegendreMap {
        self.map
    }

    pub fn evolution(&self) -> Evolution<'_> {
        Evolution::new(self.model, self.map)
    }

    /// Primary phase-space constraints as a reduction chain.
    pub fn ham_primaries(&self) -> &ConstraintSet {
        &self.ham_primaries
    }

    /// Primary velocity-space constraints as a reduction chain.
    pub fn lag_primaries(&self) -> &ConstraintSet {
        &self.lag_primaries
    }

    /// Symbolic multipliers paired with the primary constraints.
    pub fn multipliers(&self) -> &[Symbol] {
        &self.multipliers
    }

    /// Symbolic accelerations along the Hessian kernel directions.
    pub fn free_accelerations(&self) -> &[Symbol] {
        &self.free_accelerations
    }

    /// Phase-space evolution field with symbolic multipliers.
    pub fn hamiltonian_flow(&self) -> &VectorField {
        &self.hamiltonian_flow
    }

    /// Velocity-space evolution field with symbolic kernel accelerations.
    pub fn lagrangian_flow(&self) -> &VectorField {
        &self.lagrangian_flow
    }

    pub fn kernel_fields(&self) -> &[VectorField] {
        &self.kernel_fields
    }

    pub fn ansatz_degree(&self) -> u32 {
        self.ansatz_degree
    }

    fn kernel_matrix(&self) -> SymMatrix {
        let n = self.model.dim();
        let gamma = self.map.gamma();
        let mut m = SymMatrix::zero(n, gamma.len());
        for (mu, col) in gamma.iter().enumerate() {
            for (i, entry) in col.iter().enumerate() {
                m.set(i, mu, entry.clone());
            }
        }
        m
    }
}

/// A phase-space generator together with the variations and vector fields
/// it induces on both sides of the fiber map.
pub struct GeneratorCandidate {
    generator: Expr,
    conserved: Expr,
    phase_delta_q: Vec<Expr>,
    phase_delta_p: Vec<Expr>,
    velocity_delta_q: Vec<Expr>,
    velocity_delta_qdot: Vec<Expr>,
    phase_field: VectorField,
    velocity_field: VectorField,
    prolonged_field: VectorField,
    image: Expr,
}

impl GeneratorCandidate {
    pub fn new(ctx: &NoetherContext<'_>, generator: Expr) -> Result<Self, CoreError> {
        let table = ctx.map.table();
        let k = ctx.evolution();
        let conserved = ctx.map.pull_back(&generator)?;
        let mut phase_delta_q = Vec::new();
        for q in table.coordinates() {
            phase_delta_q.push(poisson_bracket(&Expr::sym(q.clone()), &generator, table)?);
        }
        let mut phase_delta_p = Vec::new();
        for p in table.momenta() {
            phase_delta_p.push(poisson_bracket(&Expr::sym(p.clone()), &generator, table)?);
        }
        let mut velocity_delta_q = Vec::new();
        let mut velocity_delta_qdot = Vec::new();
        for dq in &phase_delta_q {
            velocity_delta_q.push(ctx.map.pull_back(dq)?);
            velocity_delta_qdot.push(k.apply(dq)?);
        }
        let phase_field = VectorField::new(
            "VH",
            Space::Phase,
            table.clone(),
            Expr::zero(),
            table
                .coordinates()
                .iter()
                .cloned()
                .zip(phase_delta_q.iter().cloned())
                .chain(
                    table
                        .momenta()
                        .iter()
                        .cloned()
                        .zip(phase_delta_p.iter().cloned()),
                ),
        )?;
        let velocity_field = VectorField::new(
            "VL",
            Space::Velocity,
            table.clone(),
            Expr::zero(),
            table
                .coordinates()
                .iter()
                .cloned()
                .zip(velocity_delta_q.iter().cloned())
                .chain(
                    table
                        .velocities()
                        .iter()
                        .cloned()
                        .zip(velocity_delta_qdot.iter().cloned()),
                ),
        )?;
        let prolonged_field = bar_extension(&velocity_field, ctx.model)?;
        let image = k.apply(&generator)?;
        // The conserved quantity is a pulled-back function, so the kernel
        // fields must annihilate it; anything else is a machinery fault.
        for gamma in &ctx.kernel_fields {
            let d = gamma.apply(&conserved)?;
            if !d.is_zero() {
                return Err(CoreError::Verification(format!(
                    "conserved quantity drifts along {}: {d}",
                    gamma.label()
                )));
            }
        }
        Ok(GeneratorCandidate {
            generator,
            conserved,
            phase_delta_q,
            phase_delta_p,
            velocity_delta_q,
            velocity_delta_qdot,
            phase_field,
            velocity_field,
            prolonged_field,
            image,
        })
    }

    pub fn generator(&self) -> &Expr {
        &self.generator
    }

    /// Velocity-space image of the generator under the fiber map.
    pub fn conserved_quantity(&self) -> &Expr {
        &self.conserved
    }

    /// Canonical coordinate variations, one per coordinate.
    pub fn phase_delta_q(&self) -> &[Expr] {
        &self.phase_delta_q
    }

    /// Canonical momentum variations, one per momentum.
    pub fn phase_delta_p(&self) -> &[Expr] {
        &self.phase_delta_p
    }

    /// Projected coordinate variations on velocity space.
    pub fn velocity_delta_q(&self) -> &[Expr] {
        &self.velocity_delta_q
    }

    /// Velocity variations: the evolution image of the coordinate variations.
    pub fn velocity_delta_qdot(&self) -> &[Expr] {
        &self.velocity_delta_qdot
    }

    /// Canonical field of the generator on phase space.
    pub fn phase_field(&self) -> &VectorField {
        &self.phase_field
    }

    /// Induced field on velocity space.
    pub fn velocity_field(&self) -> &VectorField {
        &self.velocity_field
    }

    /// First prolongation of the induced field to second-order jets.
    pub fn prolonged_field(&self) -> &VectorField {
        &self.prolonged_field
    }

    /// Evolution image of the generator; zero exactly when the generator is
    /// a projectable symmetry.
    pub fn evolution_image(&self) -> &Expr {
        &self.image
    }
}

/// Outcome of reducing one expression modulo a constraint chain.
#[derive(Clone, Debug)]
pub struct ConditionWitness {
    /// The expression the condition constrains.
    pub input: Expr,
    /// What is left after reduction; zero when the condition holds weakly.
    pub normal_form: Expr,
    /// Coefficients of the absorbed constraint combination, chain order.
    pub combination: Vec<Expr>,
    pub pass: bool,
}

fn reduce_witness(set: &ConstraintSet, input: Expr) -> Result<ConditionWitness, CoreError> {
    let red = set.reduce(&input)?;
    let pass = red.normal_form.is_zero();
    Ok(ConditionWitness {
        input,
        normal_form: red.normal_form,
        combination: red.combination,
        pass,
    })
}

#[derive(Clone, Debug)]
pub struct KConditionReport {
    pub verdict: Verdict,
    /// The evolution image of the generator.
    pub image: Expr,
    /// Part of the image depending on time and gauge functions alone. It is
    /// reported, never silently dropped: subtracting it amounts to shifting
    /// the generator by a pure time function.
    pub redefinition: Expr,
    /// Image minus redefinition; zero on PASS.
    pub residual: Expr,
    /// On PARTIAL-NONPROJECTABLE, the coefficients of the primary
    /// velocity-constraint combination the residual reduces to.
    pub combination: Option<Vec<Expr>>,
}

/// The defining condition: the evolution operator annihilates the
/// generator, up to a reported pure time redefinition. A residual that is a
/// combination of primary velocity constraints is the hallmark of a
/// symmetry that exists on the constraint surface without projecting.
pub fn check_k_condition(
    ctx: &NoetherContext<'_>,
    cand: &GeneratorCandidate,
) -> Result<KConditionReport, CoreError> {
    let image = cand.image.clone();
    let (redefinition, residual) = split_pure_time(&image);
    if residual.is_zero() {
        return Ok(KConditionReport {
            verdict: Verdict::Pass,
            image,
            redefinition,
            residual,
            combination: None,
        });
    }
    let red = ctx.lag_primaries.reduce(&residual)?;
    if red.normal_form.is_zero() {
        Ok(KConditionReport {
            verdict: Verdict::PartialNonprojectable,
            image,
            redefinition,
            residual,
            combination: Some(red.combination),
        })
    } else {
        Ok(KConditionReport {
            verdict: Verdict::Fail,
            image,
            redefinition,
            residual,
            combination: None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct PhaseSpaceReport {
    pub verdict: Verdict,
    /// Bracket of the generator with each primary constraint, reduced
    /// modulo the primaries.
    pub primary_brackets: Vec<ConditionWitness>,
    /// Explicit time derivative plus bracket with the canonical
    /// Hamiltonian, reduced modulo the primaries.
    pub evolution_bracket: ConditionWitness,
    /// Pure time part split from the evolution bracket and reported.
    pub redefinition: Expr,
}

/// The phase-space characterization: the generator commutes weakly with the
/// primary constraints and evolves weakly into primary constraints under
/// the canonical Hamiltonian.
pub fn check_phase_space(
    ctx: &NoetherContext<'_>,
    cand: &GeneratorCandidate,
) -> Result<PhaseSpaceReport, CoreError> {
    let table = ctx.map.table();
    let mut primary_brackets = Vec::new();
    for phi in ctx.map.primary_constraints() {
        let bracket = poisson_bracket(&cand.generator, phi, table)?;
        primary_brackets.push(reduce_witness(&ctx.ham_primaries, bracket)?);
    }
    let advance = Expr::add2(
        &partial_time(&cand.generator, table),
        &poisson_bracket(&cand.generator, ctx.map.hamiltonian(), table)?,
    );
    let red = ctx.ham_primaries.reduce(&advance)?;
    let (redefinition, rest) = split_pure_time(&red.normal_form);
    let evolution_bracket = ConditionWitness {
        input: advance,
        normal_form: rest.clone(),
        combination: red.combination,
        pass: rest.is_zero(),
    };
    let verdict = if evolution_bracket.pass && primary_brackets.iter().all(|w| w.pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(PhaseSpaceReport {
        verdict,
        primary_brackets,
        evolution_bracket,
        redefinition,
    })
}

#[derive(Clone, Debug)]
pub struct CommutationReport {
    pub verdict: Verdict,
    /// Pairs (h, difference): the induced velocity-space variation of the
    /// evolution image of h, minus the evolution image of the canonical
    /// variation of h, over the structured generating family.
    pub differences: Vec<(Expr, Expr)>,
    /// Nonzero outcomes of the same difference over pseudo-random
    /// polynomial probes.
    pub random_failures: u32,
    pub random_count: u32,
    /// Pairs (p, mismatch) of the pulled-back variation differences on the
    /// momenta.
    pub pull_back_differences: Vec<(Expr, Expr)>,
    /// Exact derivative identities tying both mismatch families to the
    /// gradients of the generator's evolution image. These hold for every
    /// candidate, symmetric or not; a failure is a machinery fault.
    pub gradient_identities_ok: bool,
}

fn commutation_difference(
    ctx: &NoetherContext<'_>,
    cand: &GeneratorCandidate,
    k: &Evolution<'_>,
    h: &Expr,
) -> Result<Expr, CoreError> {
    let kh = k.apply(h)?;
    let dh = poisson_bracket(h, &cand.generator, ctx.map.table())?;
    Ok(Expr::sub(&cand.velocity_field.apply(&kh)?, &k.apply(&dh)?))
}

/// The commutation characterization: on a generating family of phase-space
/// functions (all coordinates, momenta, their squares and pairings, plus
/// random polynomial probes) the variation of the evolution image equals
/// the evolution image of the variation.
pub fn check_commutation(
    ctx: &NoetherContext<'_>,
    cand: &GeneratorCandidate,
) -> Result<CommutationReport, CoreError> {
    let table = ctx.map.table();
    let k = ctx.evolution();
    let n = table.dim();
    let mut family: Vec<Expr> = Vec::new();
    for q in table.coordinates() {
        family.push(Expr::sym(q.clone()));
    }
    for p in table.momenta() {
        family.push(Expr::sym(p.clone()));
    }
    for q in table.coordinates() {
        family.push(Expr::mul2(
            &Expr::num(ratio(1, 2)),
            &Expr::sym(q.clone()).powi(2),
        ));
    }
    for (q, p) in table.coordinates().iter().zip(table.momenta()) {
        family.push(Expr::mul2(&Expr::sym(q.clone()), &Expr::sym(p.clone())));
    }
    let mut differences = Vec::new();
    for h in &family {
        let d = commutation_difference(ctx, cand, &k, h)?;
        differences.push((h.clone(), d));
    }
    let probes = random_phase_polynomials(table, ctx.probe_seed, ctx.probe_count);
    let mut random_failures = 0;
    for h in &probes {
        if !commutation_difference(ctx, cand, &k, h)?.is_zero() {
            random_failures += 1;
        }
    }
    let mut pull_back_differences = Vec::new();
    let mut gradient_identities_ok = true;
    for (i, p) in table.momenta().iter().enumerate() {
        let p_expr = Expr::sym(p.clone());
        let dp = poisson_bracket(&p_expr, &cand.generator, table)?;
        let pulled_mismatch = Expr::sub(
            &cand.velocity_field.apply(&ctx.map.pull_back(&p_expr)?)?,
            &ctx.map.pull_back(&dp)?,
        );
        let velocity_gradient = diff(&cand.image, &table.velocities()[i]);
        if !Expr::sub(&pulled_mismatch, &velocity_gradient).is_zero() {
            gradient_identities_ok = false;
        }
        let coordinate_gradient = diff(&cand.image, &table.coordinates()[i]);
        if !Expr::sub(&differences[n + i].1, &coordinate_gradient).is_zero() {
            gradient_identities_ok = false;
        }
        pull_back_differences.push((p_expr, pulled_mismatch));
    }
    let all_zero = differences.iter().all(|(_, d)| d.is_zero()) && random_failures == 0;
    let verdict = if all_zero {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CommutationReport {
        verdict,
        differences,
        random_failures,
        random_count: probes.len() as u32,
        pull_back_differences,
        gradient_identities_ok,
    })
}

#[derive(Clone, Debug)]
pub struct VelocityReport {
    pub verdict: Verdict,
    /// Nonzero kernel derivatives of the pulled-back chart images; empty
    /// when the induced field projects through the fiber.
    pub projectability_failures: Vec<Expr>,
    pub projectability_pass: bool,
    /// Closure coefficients of the bracket with each kernel field over the
    /// kernel fields themselves; one row per kernel field.
    pub kernel_closure: Vec<Vec<Expr>>,
    pub kernel_closure_pass: bool,
    /// Action on each primary velocity constraint, reduced modulo the
    /// primary chain.
    pub tangency: Vec<ConditionWitness>,
    /// Kernel-direction coefficients of the bracket with the evolution
    /// field, after the constraint part is reduced away.
    pub kernel_coefficients: Vec<Expr>,
    /// Irreducible remainders obstructing the bracket decomposition.
    pub decomposition_residuals: Vec<Expr>,
    pub decomposition_pass: bool,
    /// Velocity gradient of the generator's evolution image vanishes.
    pub velocity_gradient_vanishes: bool,
    /// Coordinate gradient vanishes identically.
    pub coordinate_gradient_vanishes: bool,
    /// Coordinate gradient vanishes weakly on the primary constraints.
    pub coordinate_gradient_weakly_vanishes: bool,
    /// True when the velocity-space conditions hold while the defining
    /// image condition still fails: the primary velocity constraints
    /// restrict configuration variables alone, so tangency of the induced
    /// field does not suffice for an exact symmetry.
    pub sufficiency_gap: bool,
}

/// The velocity-space characterization: projectability of the induced
/// field, tangency to the primary velocity constraints, and decomposition
/// of its bracket with the evolution field into constraint terms plus
/// kernel directions.
pub fn check_velocity_space(
    ctx: &NoetherContext<'_>,
    cand: &GeneratorCandidate,
) -> Result<VelocityReport, CoreError> {
    let table = ctx.map.table();
    let gamma_matrix = ctx.kernel_matrix();

    let mut projectability_failures = Vec::new();
    let mut chart_images = Vec::new();
    for q in table.coordinates() {
        chart_images.push(cand.velocity_field.apply(&Expr::sym(q.clone()))?);
    }
    for p_hat in ctx.model.momenta() {
        chart_images.push(cand.velocity_field.apply(p_hat)?);
    }
    for img in &chart_images {
        for gamma in &ctx.kernel_fields {
            let d = gamma.apply(img)?;
            if !d.is_zero() {
                projectability_failures.push(d);
            }
        }
    }
    let projectability_pass = projectability_failures.is_empty();

    let mut kernel_closure = Vec::new();
    let mut kernel_closure_pass = true;
    for gamma in &ctx.kernel_fields {
        let bracket = cand.velocity_field.lie_bracket(gamma)?;
        if !bracket.time_component().is_zero() {
            kernel_closure_pass = false;
        }
        for q in table.coordinates() {
            if !bracket.component(q).is_zero() {
                kernel_closure_pass = false;
            }
        }
        let rhs: Vec<Expr> = table
            .velocities()
            .iter()
            .map(|v| bracket.component(v))
            .collect();
        match solve_linear(&gamma_matrix, &rhs, |_| false) {
            Ok(sol) => kernel_closure.push(sol.particular),
            Err(_) => {
                kernel_closure_pass = false;
                kernel_closure.push(Vec::new());
            }
        }
    }

    let mut tangency = Vec::new();
    for chi in ctx.lag_primaries.flat() {
        let image = cand.velocity_field.apply(chi)?;
        tangency.push(reduce_witness(&ctx.lag_primaries, image)?);
    }
    let tangency_pass = tangency.iter().all(|w| w.pass);

    let bracket = cand.velocity_field.lie_bracket(&ctx.lagrangian_flow)?;
    let mut decomposition_residuals = Vec::new();
    let mut decomposition_pass = true;
    if !bracket.time_component().is_zero() {
        decomposition_pass = false;
        decomposition_residuals.push(bracket.time_component().clone());
    }
    for q in table.coordinates() {
        let c = bracket.component(q);
        if c.is_zero() {
            continue;
        }
        let red = ctx.lag_primaries.reduce(&c)?;
        if !red.normal_form.is_zero() {
            decomposition_pass = false;
            decomposition_residuals.push(red.normal_form);
        }
    }
    let rhs: Vec<Expr> = table
        .velocities()
        .iter()
        .map(|v| bracket.component(v))
        .collect();
    let mut kernel_coefficients = Vec::new();
    match solve_linear(&gamma_matrix, &rhs, |r| {
        ctx.lag_primaries.is_weakly_zero(r).unwrap_or(false)
    }) {
        Ok(sol) => kernel_coefficients = sol.particular,
        Err(_) => {
            decomposition_pass = false;
            for r in &rhs {
                let red = ctx.lag_primaries.reduce(r)?;
                if !red.normal_form.is_zero() {
                    decomposition_residuals.push(red.normal_form);
                }
            }
        }
    }

    let mut velocity_gradient_vanishes = true;
    for v in table.velocities() {
        if !diff(&cand.image, v).is_zero() {
            velocity_gradient_vanishes = false;
        }
    }
    let mut coordinate_gradient_vanishes = true;
    let mut coordinate_gradient_weakly_vanishes = true;
    for q in table.coordinates() {
        let g = diff(&cand.image, q);
        if !g.is_zero() {
            coordinate_gradient_vanishes = false;
        }
        if !ctx.lag_primaries.is_weakly_zero(&g)? {
            coordinate_gradient_weakly_vanishes = false;
        }
    }
    let sufficiency_gap = velocity_gradient_vanishes
        && coordinate_gradient_weakly_vanishes
        && !coordinate_gradient_vanishes;

    let verdict =
        if projectability_pass && kernel_closure_pass && tangency_pass && decomposition_pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    Ok(VelocityReport {
        verdict,
        projectability_failures,
        projectability_pass,
        kernel_closure,
        kernel_closure_pass,
        tangency,
        kernel_coefficients,
        decomposition_residuals,
        decomposition_pass,
        velocity_gradient_vanishes,
        coordinate_gradient_vanishes,
        coordinate_gradient_weakly_vanishes,
        sufficiency_gap,
    })
}

#[derive(Clone, Debug)]
pub struct BarDeltaReport {
    pub verdict: Verdict,
    /// Variation of the Lagrangian under the prolonged field.
    pub variation: Expr,
    /// Boundary charge whose total time derivative the variation must
    /// equal: the momentum pairing with the coordinate variations minus the
    /// conserved quantity.
    pub boundary: Expr,
    /// Variation minus the total time derivative of the boundary charge.
    pub residual: Expr,
    /// Exact agreement of the residual with the Euler-Lagrange pairing plus
    /// the time derivative of the conserved quantity; holds for every
    /// candidate, a failure is a machinery fault.
    pub identity_ok: bool,
}

/// The variational characterization: the prolonged variation of the
/// Lagrangian is the total time derivative of the boundary charge.
pub fn check_bar_delta_total_derivative(
    ctx: &NoetherContext<'_>,
    cand: &GeneratorCandidate,
) -> Result<BarDeltaReport, CoreError> {
    let variation = cand.prolonged_field.apply(ctx.model.lagrangian())?;
    let mut boundary_parts = Vec::new();
    for (p_hat, dq) in ctx.model.momenta().iter().zip(&cand.velocity_delta_q) {
        boundary_parts.push(Expr::mul2(p_hat, dq));
    }
    boundary_parts.push(Expr::neg(&cand.conserved));
    let boundary = Expr::add_slice(&boundary_parts);
    let residual = Expr::sub(&variation, &ctx.model.total_time_derivative(&boundary)?);
    let verdict = if residual.is_zero() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut identity_parts = Vec::new();
    for (el, dq) in ctx
        .model
        .euler_lagrange()
        .iter()
        .zip(&cand.velocity_delta_q)
    {
        identity_parts.push(Expr::mul2(el, dq));
    }
    identity_parts.push(ctx.model.total_time_derivative(&cand.conserved)?);
    let identity_ok = Expr::sub(&Expr::add_slice(&identity_parts), &residual).is_zero();
    Ok(BarDeltaReport {
        verdict,
        variation,
        boundary,
        residual,
        identity_ok,
    })
}

/// All five checks on one generator.
pub struct NoetherReport {
    pub k_condition: KConditionReport,
    pub phase_space: PhaseSpaceReport,
    pub commutation: CommutationReport,
    pub velocity_space: VelocityReport,
    pub bar_delta: BarDeltaReport,
}

impl NoetherReport {
    /// The decisive verdict is the defining image condition's.
    pub fn verdict(&self) -> Verdict {
        self.k_condition.verdict
    }
}

pub fn analyze_generator(
    ctx: &NoetherContext<'_>,
    cand: &GeneratorCandidate,
) -> Result<NoetherReport, CoreError> {
    Ok(NoetherReport {
        k_condition: check_k_condition(ctx, cand)?,
        phase_space: check_phase_space(ctx, cand)?,
        commutation: check_commutation(ctx, cand)?,
        velocity_space: check_velocity_space(ctx, cand)?,
        bar_delta: check_bar_delta_total_derivative(ctx, cand)?,
    })
}

#[derive(Clone, Debug)]
pub struct CommutatorDemonstration {
    /// Coefficients of the primary-constraint combination generating the
    /// bracket of the candidate field with the phase-space evolution field.
    pub coefficients: Vec<Expr>,
    /// The generating combination itself.
    pub generating_function: Expr,
    /// Nonzero component residuals after subtracting the canonical field of
    /// the generating combination, reduced modulo the primaries.
    pub residuals: Vec<Expr>,
    pub pass: bool,
}

/// Demonstrates the bracket form of the phase-space characterization: the
/// bracket of the candidate field with the evolution field (symbolic
/// multipliers included) is weakly the canonical field of a
/// primary-constraint combination, whose coefficients are solved for.
pub fn demonstrate_commutator(
    ctx: &NoetherContext<'_>,
    cand: &GeneratorCandidate,
) -> Result<CommutatorDemonstration, CoreError> {
    let table = ctx.map.table();
    let bracket = cand.phase_field.lie_bracket(&ctx.hamiltonian_flow)?;
    let primaries = ctx.map.primary_constraints();
    let n = table.dim();
    let mut m = SymMatrix::zero(2 * n, primaries.len());
    let mut rhs = Vec::with_capacity(2 * n);
    for (i, q) in table.coordinates().iter().enumerate() {
        for (mu, phi) in primaries.iter().enumerate() {
            m.set(i, mu, diff(phi, &table.momenta()[i]));
        }
        rhs.push(bracket.component(q));
    }
    for (i, p) in table.momenta().iter().enumerate() {
        for (mu, phi) in primaries.iter().enumerate() {
            m.set(n + i, mu, Expr::neg(&diff(phi, &table.coordinates()[i])));
        }
        rhs.push(bracket.component(p));
    }
    let solved = solve_linear(&m, &rhs, |r| {
        ctx.ham_primaries.is_weakly_zero(r).unwrap_or(false)
    });
    let coefficients = match solved {
        Ok(sol) => sol.particular,
        Err(_) => {
            let mut residuals = Vec::new();
            for r in &rhs {
                let red = ctx.ham_primaries.reduce(r)?;
                if !red.normal_form.is_zero() {
                    residuals.push(red.normal_form);
                }
            }
            return Ok(CommutatorDemonstration {
                coefficients: Vec::new(),
                generating_function: Expr::zero(),
                residuals,
                pass: false,
            });
        }
    };
    let mut generating_parts = Vec::new();
    for (c, phi) in coefficients.iter().zip(primaries) {
        generating_parts.push(Expr::mul2(c, phi));
    }
    let generating_function = Expr::add_slice(&generating_parts);
    let mut residuals = Vec::new();
    let mut pass = bracket.time_component().is_zero();
    for (row, r) in rhs.iter().enumerate() {
        let mut expected = Vec::new();
        for (mu, c) in coefficients.iter().enumerate() {
            expected.push(Expr::mul2(c, m.get(row, mu)));
        }
        let red = ctx
            .ham_primaries
            .reduce(&Expr::sub(r, &Expr::add_slice(&expected)))?;
        if !red.normal_form.is_zero() {
            residuals.push(red.normal_form);
            pass = false;
        }
    }
    Ok(CommutatorDemonstration {
        coefficients,
        generating_function,
        residuals,
        pass,
    })
}

/// A gauge generator assembled along a chain of gauge-function derivatives.
#[derive(Clone, Debug)]
pub struct GaugeSolution {
    /// The assembled generator: the k-th part multiplied by the
    /// (depth - k)-th derivative of the gauge function, summed.
    pub generator: Expr,
    /// Chain parts, leading part first.
    pub parts: Vec<Expr>,
    /// Scaling applied to the seed before the chain closed; one when the
    /// seed worked unscaled.
    pub scaling: Expr,
    /// Pure time part subtracted at the final order and reported.
    pub redefinition: Expr,
}

struct ChainOutcome {
    parts: Vec<Expr>,
    residual: Expr,
    redefinition: Expr,
}

fn kernel_invariant(ctx: &NoetherContext<'_>, e: &Expr) -> Result<bool, CoreError> {
    for gamma in &ctx.kernel_fields {
        if !gamma.apply(e)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shift a chain part by a primary-constraint combination so that its
/// evolution image drops the terms proportional to the primary velocity
/// constraints. Possible exactly when the reduction certificates project
/// through the fiber.
fn chi_correction(
    ctx: &NoetherContext<'_>,
    part: &Expr,
    image: &Expr,
) -> Result<Option<(Expr, Expr)>, CoreError> {
    let red = ctx.lag_primaries.reduce(image)?;
    if red.combination.iter().all(|c| c.is_zero()) {
        return Ok(None);
    }
    let mut shift = Vec::new();
    for (j, d) in red.combination.iter().enumerate() {
        if d.is_zero() {
            continue;
        }
        let Some(c) = ctx.map.try_project(d)? else {
            return Ok(None);
        };
        shift.push(Expr::mul2(
            &c,
            &ctx.map.primary_constraints()[ctx.lag_sources[j]],
        ));
    }
    let corrected = Expr::sub(part, &Expr::add_slice(&shift));
    Ok(Some((corrected, red.normal_form.clone())))
}

fn gauge_chain(
    ctx: &NoetherContext<'_>,
    leading: &Expr,
    depth: u32,
    correct: bool,
) -> Result<ChainOutcome, CoreError> {
    let k = ctx.evolution();
    let mut parts = vec![leading.clone()];
    for _ in 0..depth {
        let mut image = k.apply(parts.last().unwrap())?;
        if correct && !kernel_invariant(ctx, &image)? {
            if let Some((part, reduced)) = chi_correction(ctx, parts.last().unwrap(), &image)? {
                *parts.last_mut().unwrap() = part;
                image = reduced;
            }
        }
        if !kernel_invariant(ctx, &image)? {
            return Err(CoreError::AnsatzFailed(format!(
                "chain image {image} is not kernel invariant"
            )));
        }
        let Some(projected) = ctx.map.try_project(&image)? else {
            return Err(CoreError::AnsatzFailed(format!(
                "chain image {image} does not project through the momentum inversions"
            )));
        };
        parts.push(Expr::neg(&projected));
    }
    let mut last_image = k.apply(parts.last().unwrap())?;
    if correct && !last_image.is_zero() {
        if let Some((part, reduced)) = chi_correction(ctx, parts.last().unwrap(), &last_image)? {
            *parts.last_mut().unwrap() = part;
            last_image = reduced;
        }
    }
    let (redefinition, residual) = split_pure_time(&last_image);
    Ok(ChainOutcome {
        parts,
        residual,
        redefinition,
    })
}

fn assemble_gauge(base: &str, outcome: &ChainOutcome, scaling: Expr) -> GaugeSolution {
    let depth = outcome.parts.len() - 1;
    let mut terms = Vec::new();
    for (k, part) in outcome.parts.iter().enumerate() {
        let g = Symbol::gauge(base, (depth - k) as u32);
        terms.push(Expr::mul2(&Expr::sym(g), part));
    }
    GaugeSolution {
        generator: Expr::add_slice(&terms),
        parts: outcome.parts.clone(),
        scaling,
        redefinition: outcome.redefinition.clone(),
    }
}

/// Monomials over the phase-space atoms of the system data, together with
/// the inverses of the provably nonvanishing ones, used as candidate seed
/// scalings when the unscaled chain does not close.
fn scaling_basis(ctx: &NoetherContext<'_>, seed: &Expr) -> Vec<Expr> {
    let mut sources: Vec<&Expr> = vec![ctx.map.hamiltonian(), seed];
    for phi in ctx.map.primary_constraints() {
        sources.push(phi);
    }
    let atoms = collect_generators(&sources, |s| {
        matches!(
            s.kind(),
            SymbolKind::Coordinate | SymbolKind::Momentum | SymbolKind::Parameter
        )
    });
    let mut gens = atoms.clone();
    for a in &atoms {
        if provably_nonvanishing(a) {
            gens.push(a.powi(-1));
        }
    }
    let mut unique: Vec<Expr> = Vec::new();
    for g in gens {
        if !unique.iter().any(|u| Expr::sub(u, &g).is_zero()) {
            unique.push(g);
        }
    }
    monomials(&unique, 2)
}

/// Reconstruct a gauge generator from a primary-constraint seed: posit a
/// chain of parts multiplying descending derivatives of the gauge function,
/// close it order by order by projecting the evolution images, and demand
/// that the final image vanish. When the plain chain leaves an obstruction,
/// retry with seed scalings from a monomial basis; the chain is linear in
/// the leading part, so a scaling that cancels the obstruction is found by
/// rational combination of the basis residuals.
pub fn solve_gauge_generator(
    ctx: &NoetherContext<'_>,
    seed: &Expr,
    depth: u32,
) -> Result<GaugeSolution, CoreError> {
    if ctx.map.primary_constraints().is_empty() {
        return Err(CoreError::Verification(
            "gauge construction needs at least one primary constraint".to_string(),
        ));
    }
    if !ctx.map.pull_back(seed)?.is_zero() {
        return Err(CoreError::Verification(
            "the seed must vanish under the fiber projection, as primary-constraint combinations do"
                .to_string(),
        ));
    }
    if !is_first_class_wrt_primaries(ctx.map, seed, ctx.ansatz_degree)? {
        return Err(CoreError::Verification(
            "the seed must commute weakly with the primary constraints".to_string(),
        ));
    }
    let base = ctx
        .map
        .table()
        .gauge_bases()
        .first()
        .cloned()
        .ok_or_else(|| {
            CoreError::Verification(
                "a gauge function must be declared to assemble the generator".to_string(),
            )
        })?;

    let direct = gauge_chain(ctx, seed, depth, true);
    if let Ok(outcome) = &direct {
        if outcome.residual.is_zero() {
            return Ok(assemble_gauge(&base, outcome, Expr::one()));
        }
    }

    let mut completed: Vec<(Expr, ChainOutcome)> = Vec::new();
    for b in scaling_basis(ctx, seed) {
        // a scaling that vanishes on the constraint surface degrades the
        // leading part to a quadratic-in-constraints triviality
        if ctx.ham_primaries.is_weakly_zero(&b)? {
            continue;
        }
        let scaled = Expr::mul2(&b, seed);
        if let Ok(outcome) = gauge_chain(ctx, &scaled, depth, false) {
            completed.push((b, outcome));
        }
    }
    for i in 0..completed.len() {
        let scaling = if completed[i].1.residual.is_zero() {
            completed[i].0.clone()
        } else {
            let others: Vec<Expr> = completed
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, (_, o))| o.residual.clone())
                .collect();
            let Some(coeffs) = match_rational_combination(&completed[i].1.residual, &others) else {
                continue;
            };
            let mut scaling = completed[i].0.clone();
            let mut idx = 0;
            for (k, (b, _)) in completed.iter().enumerate() {
                if k == i {
                    continue;
                }
                scaling = Expr::sub(&scaling, &Expr::mul2(&Expr::num(coeffs[idx].clone()), b));
                idx += 1;
            }
            scaling
        };
        if scaling.is_zero() || ctx.ham_primaries.is_weakly_zero(&scaling)? {
            continue;
        }
        let outcome = gauge_chain(ctx, &Expr::mul2(&scaling, seed), depth, true)?;
        if outcome.residual.is_zero() {
            return Ok(assemble_gauge(&base, &outcome, scaling));
        }
    }
    match direct {
        Ok(outcome) => Err(CoreError::AnsatzFailed(format!(
            "gauge chain leaves the irreducible obstruction {}",
            outcome.residual
        ))),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug)]
pub struct StructurePair {
    pub i: usize,
    pub j: usize,
    /// Action of generator j's velocity field on generator i's conserved
    /// quantity.
    pub action: Expr,
    /// Coefficients expressing the action over the conserved quantities;
    /// absent when the matching ansatz fails.
    pub coefficients: Option<Vec<Expr>>,
    /// Agreement, on random probes, of the field bracket acting on
    /// pulled-back functions with the pulled-back nested bracket of the two
    /// generators.
    pub projection_ok: bool,
}

#[derive(Clone, Debug)]
pub struct StructureReport {
    pub pairs: Vec<StructurePair>,
    /// All matched coefficients are rational constants.
    pub all_constant: bool,
    /// With constant coefficients: componentwise closure of the field
    /// brackets on the span of the candidate fields. Absent otherwise.
    pub fields_close: Option<bool>,
}

/// Structure functions of a family of generators: how each velocity field
/// acts on the other conserved quantities, and whether the field algebra
/// closes accordingly.
pub fn structure_functions(
    ctx: &NoetherContext<'_>,
    cands: &[GeneratorCandidate],
) -> Result<StructureReport, CoreError> {
    let table = ctx.map.table();
    let conserved: Vec<Expr> = cands.iter().map(|c| c.conserved.clone()).collect();
    let sources: Vec<&Expr> = conserved.iter().collect();
    let generators = collect_generators(&sources, |s| {
        !matches!(s.kind(), SymbolKind::Momentum | SymbolKind::Acceleration)
    });
    let probes = random_phase_polynomials(table, ctx.probe_seed ^ 0xa5a5_5a5a_1234_8765, 5);
    let mut pairs = Vec::new();
    let mut all_constant = true;
    for j in 0..cands.len() {
        for i in 0..cands.len() {
            if i == j {
                continue;
            }
            let action = cands[j].velocity_field.apply(&conserved[i])?;
            let coefficients = if action.is_zero() {
                Some(vec![Expr::zero(); cands.len()])
            } else {
                match_combination(&action, &conserved, &generators, ctx.ansatz_degree)
                    .map(|c| c.coefficients)
            };
            match &coefficients {
                Some(cs) => {
                    if cs.iter().any(|c| !c.is_zero() && c.as_num().is_none()) {
                        all_constant = false;
                    }
                }
                None => all_constant = false,
            }
            let bracket_field = cands[i]
                .velocity_field
                .lie_bracket(&cands[j].velocity_field)?;
            let inner = poisson_bracket(&cands[j].generator, &cands[i].generator, table)?;
            let mut projection_ok = true;
            for h in &probes {
                let lhs = bracket_field.apply(&ctx.map.pull_back(h)?)?;
                let rhs = ctx.map.pull_back(&poisson_bracket(h, &inner, table)?)?;
                if !Expr::sub(&lhs, &rhs).is_zero() {
                    projection_ok = false;
                }
            }
            pairs.push(StructurePair {
                i,
                j,
                action,
                coefficients,
                projection_ok,
            });
        }
    }
    let fields_close = if all_constant {
        let mut ok = true;
        for pair in &pairs {
            let Some(cs) = &pair.coefficients else {
                ok = false;
                continue;
            };
            let bracket = cands[pair.i]
                .velocity_field
                .lie_bracket(&cands[pair.j].velocity_field)?;
            let mut directions: Vec<&Symbol> = table.coordinates().iter().collect();
            directions.extend(table.velocities().iter());
            for direction in directions {
                let mut expected = Vec::new();
                for (k, c) in cs.iter().enumerate() {
                    expected.push(Expr::mul2(c, &cands[k].velocity_field.component(direction)));
                }
                if !Expr::sub(&bracket.component(direction), &Expr::add_slice(&expected)).is_zero()
                {
                    ok = false;
                }
            }
        }
        Some(ok)
    } else {
        None
    };
    Ok(StructureReport {
        pairs,
        all_constant,
        fields_close,
    })
}

fn indexed_free_parameters(base: &str, count: usize) -> Vec<Symbol> {
    if count == 1 {
        return vec![Symbol::free_parameter(base)];
    }
    (0..count)
        .map(|k| Symbol::free_parameter(&format!("{base}{k}")))
        .collect()
}

/// Split off the terms depending on nothing but time and the gauge
/// functions. Such terms are removable by shifting the generator with a
/// pure time function, so checks report them instead of failing on them.
fn split_pure_time(e: &Expr) -> (Expr, Expr) {
    let mut pure = Vec::new();
    let mut rest = Vec::new();
    for term in e.terms() {
        if term
            .symbols()
            .iter()
            .all(|s| matches!(s.kind(), SymbolKind::Time | SymbolKind::GaugeDerivative))
        {
            pure.push(term.clone());
        } else {
            rest.push(term.clone());
        }
    }
    (Expr::add_slice(&pure), Expr::add_slice(&rest))
}

/// Deterministic pseudo-random quadratic polynomials on phase space.
fn random_phase_polynomials(table: &SymbolTable, seed: u64, count: u32) -> Vec<Expr> {
    let mut state = seed;
    let mut vars: Vec<Symbol> = table.coordinates().to_vec();
    vars.extend(table.momenta().iter().cloned());
    let mut out = Vec::new();
    while out.len() < count as usize {
        let mut terms = Vec::new();
        for _ in 0..3 {
            let c = (splitmix64(&mut state) % 7) as i64 - 3;
            let a = vars[(splitmix64(&mut state) as usize) % vars.len()].clone();
            let b = vars[(splitmix64(&mut state) as usize) % vars.len()].clone();
            if c != 0 {
                terms.push(Expr::mul_slice(&[Expr::int(c), Expr::sym(a), Expr::sym(b)]));
            }
        }
        let h = Expr::add_slice(&terms);
        if !h.is_zero() {
            out.push(h);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
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

    fn auxiliary() -> (SystemModel, LegendreMap) {
        let t = SymbolTableBuilder::new()
            .coordinate("x")
            .coordinate("y")
            .build()
            .unwrap();
        let l = parse_expr("1/2*xdot^2 - 1/2*y^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        (model, map)
    }

    #[test]
    fn gauge_generator_passes_every_characterization() {
        let (model, map) = relativistic();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let t = map.table();
        let g = parse_expr("exp(-w)*epsdot*p_w + 1/2*eps*(p_x^2 - m^2)", t).unwrap();
        let cand = GeneratorCandidate::new(&ctx, g).unwrap();
        let report = analyze_generator(&ctx, &cand).unwrap();

        assert_eq!(report.verdict(), Verdict::Pass);
        assert!(report.k_condition.image.is_zero());
        assert!(report.k_condition.redefinition.is_zero());

        assert_eq!(report.phase_space.verdict, Verdict::Pass);
        let want_d = parse_expr("-exp(-w)*epsdot", t).unwrap();
        assert_eq!(report.phase_space.primary_brackets.len(), 1);
        assert!(Expr::sub(
            &report.phase_space.primary_brackets[0].combination[0],
            &want_d
        )
        .is_zero());

        assert_eq!(report.commutation.verdict, Verdict::Pass);
        assert!(report.commutation.gradient_identities_ok);
        assert_eq!(report.commutation.random_failures, 0);

        let v = &report.velocity_space;
        assert_eq!(v.verdict, Verdict::Pass);
        assert!(v.projectability_pass && v.kernel_closure_pass);
        let want_closure = parse_expr("exp(-w)*epsdot", t).unwrap();
        assert!(Expr::sub(&v.kernel_closure[0][0], &want_closure).is_zero());
        assert!(v.tangency[0].pass);
        let want_tangency = parse_expr("exp(-w)*epsdot", t).unwrap();
        assert!(Expr::sub(&v.tangency[0].combination[0], &want_tangency).is_zero());
        assert!(v.decomposition_pass);
        let eta = Expr::sym(Symbol::free_parameter("eta"));
        let want_beta = Expr::add_slice(&[
            parse_expr("exp(-w)*(-eps_d3 + 2*epsddot*wdot - epsdot*wdot^2)", t).unwrap(),
            Expr::mul2(&parse_expr("exp(-w)*epsdot", t).unwrap(), &eta),
            Expr::sym(Symbol::opaque_application(
                "VL",
                &Symbol::free_parameter("eta"),
            )),
        ]);
        assert!(Expr::sub(&v.kernel_coefficients[0], &want_beta).is_zero());
        assert!(!v.sufficiency_gap);

        assert_eq!(report.bar_delta.verdict, Verdict::Pass);
        assert!(report.bar_delta.identity_ok);
        let want_boundary = Expr::mul2(&parse_expr("eps*exp(-w)", t).unwrap(), model.lagrangian());
        assert!(Expr::sub(&report.bar_delta.boundary, &want_boundary).is_zero());
    }

    #[test]
    fn time_shifted_generator_reports_redefinition() {
        let (model, map) = relativistic();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let t = map.table();
        let g = parse_expr("exp(-w)*epsdot*p_w + 1/2*eps*(p_x^2 - m^2) + t^2", t).unwrap();
        let cand = GeneratorCandidate::new(&ctx, g).unwrap();
        let report = check_k_condition(&ctx, &cand).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        let want = parse_expr("2*t", t).unwrap();
        assert!(Expr::sub(&report.redefinition, &want).is_zero());
        assert!(report.residual.is_zero());
    }

    #[test]
    fn commutator_demonstration_solves_the_generating_combination() {
        let (model, map) = relativistic();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let t = map.table();
        let g = parse_expr("exp(-w)*epsdot*p_w + 1/2*eps*(p_x^2 - m^2)", t).unwrap();
        let cand = GeneratorCandidate::new(&ctx, g).unwrap();
        let demo = demonstrate_commutator(&ctx, &cand).unwrap();
        assert!(demo.pass, "residuals: {:?}", demo.residuals);
        let lambda = Expr::sym(Symbol::free_parameter("lambda"));
        let want = Expr::add_slice(&[
            Expr::mul2(&parse_expr("exp(-w)*epsdot", t).unwrap(), &lambda),
            parse_expr("-exp(-w)*epsddot", t).unwrap(),
            Expr::sym(Symbol::opaque_application(
                "VH",
                &Symbol::free_parameter("lambda"),
            )),
        ]);
        assert!(Expr::sub(&demo.coefficients[0], &want).is_zero());
    }

    #[test]
    fn partial_symmetry_of_the_auxiliary_system() {
        let (model, map) = auxiliary();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let t = map.table();
        let g = parse_expr("y*p_y", t).unwrap();
        let cand = GeneratorCandidate::new(&ctx, g).unwrap();
        let report = analyze_generator(&ctx, &cand).unwrap();

        assert_eq!(report.verdict(), Verdict::PartialNonprojectable);
        let want_residual = parse_expr("-y^2", t).unwrap();
        assert!(Expr::sub(&report.k_condition.residual, &want_residual).is_zero());
        let combo = report.k_condition.combination.as_ref().unwrap();
        let want_coeff = parse_expr("y", t).unwrap();
        assert!(Expr::sub(&combo[0], &want_coeff).is_zero());

        // The three velocity-space conditions all hold, yet the symmetry is
        // not exact: the primary velocity constraint restricts a
        // configuration variable alone.
        let v = &report.velocity_space;
        assert_eq!(v.verdict, Verdict::Pass);
        assert!(v.sufficiency_gap);
        assert!(v.velocity_gradient_vanishes);
        assert!(!v.coordinate_gradient_vanishes);

        assert_eq!(report.commutation.verdict, Verdict::Fail);
        assert!(report.commutation.gradient_identities_ok);
        // difference at h = p_y, the second momentum
        let want_diff = parse_expr("-2*y", t).unwrap();
        let (_, d) = &report.commutation.differences[t.dim() + 1];
        assert!(Expr::sub(d, &want_diff).is_zero());

        assert_eq!(report.phase_space.verdict, Verdict::Fail);
        let want_cond2 = parse_expr("-y^2", t).unwrap();
        assert!(Expr::sub(
            &report.phase_space.evolution_bracket.normal_form,
            &want_cond2
        )
        .is_zero());
        assert!(report.phase_space.primary_brackets[0].pass);

        assert_eq!(report.bar_delta.verdict, Verdict::Fail);
        assert!(report.bar_delta.boundary.is_zero());
        assert!(Expr::sub(&report.bar_delta.residual, &want_residual).is_zero());
        assert!(report.bar_delta.identity_ok);
    }

    #[test]
    fn mixed_generator_fails_the_variational_condition() {
        let (model, map) = auxiliary();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let t = map.table();
        let g = parse_expr("p_x + y*p_y", t).unwrap();
        let cand = GeneratorCandidate::new(&ctx, g).unwrap();
        let report = analyze_generator(&ctx, &cand).unwrap();
        assert_ne!(report.verdict(), Verdict::Pass);
        assert_eq!(report.phase_space.verdict, Verdict::Fail);
        assert_eq!(report.bar_delta.verdict, Verdict::Fail);
        let want = parse_expr("-y^2", t).unwrap();
        assert!(Expr::sub(&report.bar_delta.residual, &want).is_zero());
    }

    #[test]
    fn translation_generator_passes_on_the_auxiliary_system() {
        let (model, map) = auxiliary();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let g = parse_expr("p_x", map.table()).unwrap();
        let cand = GeneratorCandidate::new(&ctx, g).unwrap();
        let report = analyze_generator(&ctx, &cand).unwrap();
        assert_eq!(report.verdict(), Verdict::Pass);
        assert_eq!(report.phase_space.verdict, Verdict::Pass);
        assert_eq!(report.commutation.verdict, Verdict::Pass);
        assert_eq!(report.velocity_space.verdict, Verdict::Pass);
        assert_eq!(report.bar_delta.verdict, Verdict::Pass);
        assert!(!report.velocity_space.sufficiency_gap);
    }

    #[test]
    fn regular_system_flows_commute_exactly() {
        let t = SymbolTableBuilder::new().coordinate("q").build().unwrap();
        let l = parse_expr("1/2*qdot^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        for src in ["p_q", "1/2*p_q^2"] {
            let g = parse_expr(src, map.table()).unwrap();
            let cand = GeneratorCandidate::new(&ctx, g).unwrap();
            let report = analyze_generator(&ctx, &cand).unwrap();
            assert_eq!(report.verdict(), Verdict::Pass, "generator {src}");
            assert_eq!(report.velocity_space.verdict, Verdict::Pass);
            assert_eq!(report.commutation.verdict, Verdict::Pass);
            assert_eq!(report.bar_delta.verdict, Verdict::Pass);
            // no kernel: the bracket with the dynamics vanishes identically
            let bracket = cand
                .velocity_field
                .lie_bracket(ctx.lagrangian_flow())
                .unwrap();
            assert!(bracket.time_component().is_zero());
            for (_, c) in bracket.components() {
                assert!(c.is_zero());
            }
        }
    }

    #[test]
    fn gauge_solver_reconstructs_the_generator_from_a_scaled_seed() {
        let (model, map) = relativistic();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let t = map.table();
        let seed = parse_expr("exp(-w)*p_w", t).unwrap();
        let sol = solve_gauge_generator(&ctx, &seed, 1).unwrap();
        assert!(Expr::sub(&sol.scaling, &Expr::one()).is_zero());
        assert!(sol.redefinition.is_zero());
        let want_part1 = parse_expr("1/2*(p_x^2 - m^2)", t).unwrap();
        assert!(Expr::sub(&sol.parts[1], &want_part1).is_zero());
        let want = parse_expr("exp(-w)*epsdot*p_w + 1/2*eps*(p_x^2 - m^2)", t).unwrap();
        assert!(Expr::sub(&sol.generator, &want).is_zero());
        let cand = GeneratorCandidate::new(&ctx, sol.generator).unwrap();
        let report = check_k_condition(&ctx, &cand).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
    }

    #[test]
    fn gauge_solver_finds_the_scaling_for_an_unscaled_seed() {
        let (model, map) = relativistic();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let t = map.table();
        let seed = parse_expr("p_w", t).unwrap();
        let sol = solve_gauge_generator(&ctx, &seed, 1).unwrap();
        let want_scaling = parse_expr("exp(-w)", t).unwrap();
        let ratio = crate::expr::exact_divide(&sol.scaling, &want_scaling);
        assert!(
            ratio.is_some_and(|r| r.as_num().is_some()),
            "scaling {} is not a rational multiple of exp(-w)",
            sol.scaling
        );
        let cand = GeneratorCandidate::new(&ctx, sol.generator).unwrap();
        let report = check_k_condition(&ctx, &cand).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
    }

    #[test]
    fn gauge_solver_rejects_unusable_seeds() {
        let (model, map) = relativistic();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let bad = parse_expr("p_x", map.table()).unwrap();
        assert!(matches!(
            solve_gauge_generator(&ctx, &bad, 1),
            Err(CoreError::Verification(_))
        ));

        let t = SymbolTableBuilder::new().coordinate("q").build().unwrap();
        let l = parse_expr("1/2*qdot^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let seed = parse_expr("p_q", map.table()).unwrap();
        assert!(matches!(
            solve_gauge_generator(&ctx, &seed, 1),
            Err(CoreError::Verification(_))
        ));
    }

    #[test]
    fn gauge_solver_reports_the_obstruction_for_second_class_systems() {
        // seed is first class w.r.t. the primaries, but the chain cannot
        // close: the secondary constraint is second class
        let t = SymbolTableBuilder::new()
            .coordinate("x")
            .coordinate("y")
            .gauge_function("eps")
            .build()
            .unwrap();
        let l = parse_expr("1/2*xdot^2 - 1/2*y^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let seed = parse_expr("p_y", map.table()).unwrap();
        assert!(matches!(
            solve_gauge_generator(&ctx, &seed, 1),
            Err(CoreError::AnsatzFailed(_))
        ));
    }

    #[test]
    fn gauge_family_is_abelian_with_constant_structure() {
        let t = SymbolTableBuilder::new()
            .coordinate("x")
            .coordinate("w")
            .parameter("m")
            .gauge_function("eps1")
            .gauge_function("eps2")
            .build()
            .unwrap();
        let l = parse_expr("1/2*exp(-w)*xdot^2 + 1/2*exp(w)*m^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        let ctx = NoetherContext::new(&model, &map).unwrap();
        let g1 = parse_expr("exp(-w)*eps1dot*p_w + 1/2*eps1*(p_x^2 - m^2)", map.table()).unwrap();
        let g2 = parse_expr("exp(-w)*eps2dot*p_w + 1/2*eps2*(p_x^2 - m^2)", map.table()).unwrap();
        let cands = vec![
            GeneratorCandidate::new(&ctx, g1).unwrap(),
            GeneratorCandidate::new(&ctx, g2).unwrap(),
        ];
        let report = structure_functions(&ctx, &cands).unwrap();
        assert_eq!(report.pairs.len(), 2);
        for pair in &report.pairs {
            assert!(pair.action.is_zero());
            assert!(pair.projection_ok);
            for c in pair.coefficients.as_ref().unwrap() {
                assert!(c.is_zero());
            }
        }
        assert!(report.all_constant);
        assert_eq!(report.fields_close, Some(true));
    }
}
