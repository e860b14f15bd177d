//! Vector fields on velocity space and phase space, their Lie brackets, the
//! canonical Poisson bracket, and the operator that transports phase-space
//! functions along the dynamics while landing on velocity space.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::calculus::{diff, partial_time};
use crate::error::CoreError;
use crate::expr::Expr;
use crate::legendre::LegendreMap;
use crate::model::SystemModel;
use crate::symbol::{Symbol, SymbolKind, SymbolTable};

/// Space a vector field lives on, fixing which symbols its components, its
/// arguments, and its directions may mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    /// Functions of time, coordinates, and velocities.
    Velocity,
    /// Functions of time, coordinates, and momenta.
    Phase,
    /// Velocity space extended by the accelerations.
    SecondJet,
}

impl Space {
    fn allows(self, kind: SymbolKind) -> bool {
        match kind {
            SymbolKind::Time
            | SymbolKind::Coordinate
            | SymbolKind::Parameter
            | SymbolKind::GaugeDerivative
            | SymbolKind::FreeParameter
            | SymbolKind::OpaqueApplication => true,
            SymbolKind::Velocity => matches!(self, Space::Velocity | Space::SecondJet),
            SymbolKind::Acceleration => matches!(self, Space::SecondJet),
            SymbolKind::Momentum => matches!(self, Space::Phase),
        }
    }

    fn allows_direction(self, kind: SymbolKind) -> bool {
        match kind {
            SymbolKind::Coordinate => true,
            SymbolKind::Velocity => matches!(self, Space::Velocity | Space::SecondJet),
            SymbolKind::Acceleration => matches!(self, Space::SecondJet),
            SymbolKind::Momentum => matches!(self, Space::Phase),
            _ => false,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Space::Velocity => "velocity space",
            Space::Phase => "phase space",
            Space::SecondJet => "the second jet",
        }
    }
}

/// First-order differential operator with a time direction and one direction
/// per coordinate-like symbol of its space. Applied to a function containing
/// free parameters or earlier opaque applications, the unknown action on
/// those atoms is recorded as a fresh opaque atom labelled by this field.
#[derive(Clone, Debug)]
pub struct VectorField {
    label: String,
    space: Space,
    table: SymbolTable,
    time_component: Expr,
    components: BTreeMap<Symbol, Expr>,
}

impl VectorField {
    pub fn new(
        label: &str,
        space: Space,
        table: SymbolTable,
        time_component: Expr,
        components: impl IntoIterator<Item = (Symbol, Expr)>,
    ) -> Result<Self, CoreError> {
        let mut map = BTreeMap::new();
        for (direction, component) in components {
            if !space.allows_direction(direction.kind()) {
                return Err(CoreError::SpaceMismatch(format!(
                    "{} is not a direction on {}",
                    direction.name(),
                    space.name()
                )));
            }
            check_space(&component, space, "vector field component")?;
            if !component.is_literal_zero() {
                map.insert(direction, component);
            }
        }
        check_space(&time_component, space, "vector field time component")?;
        Ok(VectorField {
            label: label.to_string(),
            space,
            table,
            time_component,
            components: map,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn time_component(&self) -> &Expr {
        &self.time_component
    }

    /// Component along a direction; zero when the field does not move it.
    pub fn component(&self, direction: &Symbol) -> Expr {
        self.components
            .get(direction)
            .cloned()
            .unwrap_or_else(Expr::zero)
    }

    pub fn components(&self) -> &BTreeMap<Symbol, Expr> {
        &self.components
    }

    /// Derivative of `f` along the field. Free parameters and opaque atoms
    /// in `f` contribute fresh opaque atoms, since the field's action on
    /// them is not determined by its components.
    pub fn apply(&self, f: &Expr) -> Result<Expr, CoreError> {
        check_space(f, self.space, "vector field argument")?;
        let mut parts: Vec<Expr> = Vec::new();
        if !self.time_component.is_literal_zero() {
            parts.push(Expr::mul2(
                &self.time_component,
                &partial_time(f, &self.table),
            ));
        }
        for (direction, component) in &self.components {
            parts.push(Expr::mul2(component, &diff(f, direction)));
        }
        for s in f.symbols() {
            if matches!(
                s.kind(),
                SymbolKind::FreeParameter | SymbolKind::OpaqueApplication
            ) {
                let unknown = Symbol::opaque_application(&self.label, &s);
                parts.push(Expr::mul2(&Expr::sym(unknown), &diff(f, &s)));
            }
        }
        Ok(Expr::add_slice(&parts))
    }

    /// Commutator field: each component is this field applied to the other's
    /// component minus the other applied to this one's.
    pub fn lie_bracket(&self, other: &VectorField) -> Result<VectorField, CoreError> {
        if self.space != other.space {
            return Err(CoreError::SpaceMismatch(format!(
                "cannot commute a field on {} with a field on {}",
                self.space.name(),
                other.space.name()
            )));
        }
        let label = format!("{}_{}", self.label, other.label);
        let time = Expr::sub(
            &self.apply(&other.time_component)?,
            &other.apply(&self.time_component)?,
        );
        let mut directions: Vec<Symbol> = self.components.keys().cloned().collect();
        for k in other.components.keys() {
            if !self.components.contains_key(k) {
                directions.push(k.clone());
            }
        }
        let mut components = Vec::new();
        for direction in directions {
            let forward = self.apply(&other.component(&direction))?;
            let backward = other.apply(&self.component(&direction))?;
            let entry = Expr::sub(&forward, &backward);
            if !entry.is_zero() {
                components.push((direction, entry));
            }
        }
        VectorField::new(&label, self.space, self.table.clone(), time, components)
    }
}

fn check_space(e: &Expr, space: Space, context: &str) -> Result<(), CoreError> {
    for s in e.symbols() {
        if !space.allows(s.kind()) {
            return Err(CoreError::SpaceMismatch(format!(
                "{context} mentions {}, which does not live on {}",
                s.name(),
                space.name()
            )));
        }
    }
    Ok(())
}

/// Canonical Poisson bracket of two phase-space functions.
pub fn poisson_bracket(f: &Expr, g: &Expr, table: &SymbolTable) -> Result<Expr, CoreError> {
    check_space(f, Space::Phase, "Poisson bracket operand")?;
    check_space(g, Space::Phase, "Poisson bracket operand")?;
    let mut parts = Vec::with_capacity(2 * table.dim());
    for (q, p) in table.coordinates().iter().zip(table.momenta()) {
        parts.push(Expr::mul2(&diff(f, q), &diff(g, p)));
        parts.push(Expr::neg(&Expr::mul2(&diff(f, p), &diff(g, q))));
    }
    Ok(Expr::add_slice(&parts))
}

/// Hamiltonian evolution field `XH`: moves time at unit rate and every
/// phase-space direction by the bracket with the Hamiltonian plus the given
/// multiplier combination of primary constraints.
pub fn hamiltonian_field(
    map: &LegendreMap,
    multipliers: &[Expr],
) -> Result<VectorField, CoreError> {
    let phis = map.primary_constraints();
    if multipliers.len() != phis.len() {
        return Err(CoreError::Verification(format!(
            "{} multipliers supplied for {} primary constraints",
            multipliers.len(),
            phis.len()
        )));
    }
    let table = map.table().clone();
    let h = map.hamiltonian();
    let mut components = Vec::with_capacity(2 * table.dim());
    for (q, p) in table.coordinates().iter().zip(table.momenta()) {
        let mut q_parts = alloc::vec![diff(h, p)];
        let mut p_parts = alloc::vec![Expr::neg(&diff(h, q))];
        for (lambda, phi) in multipliers.iter().zip(phis) {
            q_parts.push(Expr::mul2(lambda, &diff(phi, p)));
            p_parts.push(Expr::neg(&Expr::mul2(lambda, &diff(phi, q))));
        }
        components.push((q.clone(), Expr::add_slice(&q_parts)));
        components.push((p.clone(), Expr::add_slice(&p_parts)));
    }
    VectorField::new("XH", Space::Phase, table, Expr::one(), components)
}

/// Velocity-space evolution field `XL`: moves time at unit rate,
/// coordinates by their velocities, and velocities by the supplied
/// accelerations (one per coordinate).
pub fn lagrangian_field(
    model: &SystemModel,
    accelerations: &[Expr],
) -> Result<VectorField, CoreError> {
    let table = model.table().clone();
    if accelerations.len() != table.dim() {
        return Err(CoreError::Verification(format!(
            "{} accelerations supplied for {} coordinates",
            accelerations.len(),
            table.dim()
        )));
    }
    let mut components = Vec::with_capacity(2 * table.dim());
    for (q, v) in table.coordinates().iter().zip(table.velocities()) {
        components.push((q.clone(), Expr::sym(v.clone())));
    }
    for (v, a) in table.velocities().iter().zip(accelerations) {
        components.push((v.clone(), a.clone()));
    }
    VectorField::new("XL", Space::Velocity, table, Expr::one(), components)
}

/// Kernel field `Gamma{mu}`: moves velocities along the aligned kernel
/// vector of constraint `mu` and nothing else.
pub fn kernel_field(map: &LegendreMap, mu: usize) -> Result<VectorField, CoreError> {
    let table = map.table().clone();
    let gamma = &map.gamma()[mu];
    let components: Vec<(Symbol, Expr)> = table
        .velocities()
        .iter()
        .zip(gamma)
        .map(|(v, g)| (v.clone(), g.clone()))
        .collect();
    VectorField::new(
        &format!("Gamma{mu}"),
        Space::Velocity,
        table,
        Expr::zero(),
        components,
    )
}

/// Prolongation of a velocity-space variation: keeps the coordinate
/// components and replaces each velocity component with the total time
/// derivative of the matching coordinate component. The result lives on the
/// second jet; its difference from the original field is proportional to
/// the equations of motion.
pub fn bar_extension(field: &VectorField, model: &SystemModel) -> Result<VectorField, CoreError> {
    if field.space() != Space::Velocity {
        return Err(CoreError::SpaceMismatch(
            "prolongation is defined for velocity-space fields".to_string(),
        ));
    }
    if !field.time_component().is_zero() {
        return Err(CoreError::Verification(
            "prolongation is defined for fields that do not move time".to_string(),
        ));
    }
    let table = field.table().clone();
    let mut components = Vec::new();
    for (q, v) in table.coordinates().iter().zip(table.velocities()) {
        let dq = field.component(q);
        components.push((v.clone(), model.total_time_derivative(&dq)?));
        components.push((q.clone(), dq));
    }
    VectorField::new(
        &format!("{}bar", field.label()),
        Space::SecondJet,
        table,
        Expr::zero(),
        components,
    )
}

/// The operator taking a phase-space function to the velocity-space time
/// derivative of its pull-back along the dynamics. Three algebraically
/// different presentations are provided; they agree identically, which the
/// test suite exploits as a cross-check.
pub struct Evolution<'a> {
    model: &'a SystemModel,
    map: &'a LegendreMap,
}

impl<'a> Evolution<'a> {
    pub fn new(model: &'a SystemModel, map: &'a LegendreMap) -> Self {
        Evolution { model, map }
    }

    /// Direct form: pulled-back time and coordinate derivatives advance by
    /// the velocities, momentum derivatives by the coordinate derivatives
    /// of the Lagrangian.
    pub fn apply(&self, h: &Expr) -> Result<Expr, CoreError> {
        let table = self.model.table();
        let mut parts = alloc::vec![self.map.pull_back(&partial_time(h, table))?];
        for (q, v) in table.coordinates().iter().zip(table.velocities()) {
            parts.push(Expr::mul2(
                &self.map.pull_back(&diff(h, q))?,
                &Expr::sym(v.clone()),
            ));
        }
        for (q, p) in table.coordinates().iter().zip(table.momenta()) {
            parts.push(Expr::mul2(
                &self.map.pull_back(&diff(h, p))?,
                &diff(self.model.lagrangian(), q),
            ));
        }
        Ok(Expr::add_slice(&parts))
    }

    /// Equation-of-motion form: total time derivative of the pull-back,
    /// corrected by the Euler-Lagrange expressions against the momentum
    /// gradient. The acceleration terms cancel identically.
    pub fn apply_el_form(&self, h: &Expr) -> Result<Expr, CoreError> {
        let table = self.model.table();
        let pulled = self.map.pull_back(h)?;
        let mut parts = alloc::vec![self.model.total_time_derivative(&pulled)?];
        for (el, p) in self.model.euler_lagrange().iter().zip(table.momenta()) {
            parts.push(Expr::mul2(el, &self.map.pull_back(&diff(h, p))?));
        }
        Ok(Expr::add_slice(&parts))
    }

    /// Hamiltonian form: pulled-back time derivative plus the pulled-back
    /// bracket with the Hamiltonian plus the velocity multipliers against
    /// the pulled-back brackets with the primary constraints.
    pub fn apply_h_form(&self, h: &Expr) -> Result<Expr, CoreError> {
        let table = self.model.table();
        let mut parts = alloc::vec![self.map.pull_back(&partial_time(h, table))?];
        parts.push(
            self.map
                .pull_back(&poisson_bracket(h, self.map.hamiltonian(), table)?)?,
        );
        for (v, phi) in self
            .map
            .v_multipliers()
            .iter()
            .zip(self.map.primary_constraints())
        {
            parts.push(Expr::mul2(
                v,
                &self.map.pull_back(&poisson_bracket(h, phi, table)?)?,
            ));
        }
        Ok(Expr::add_slice(&parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::LegendreMap;
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

    fn phase_variation(table: &SymbolTable) -> VectorField {
        VectorField::new(
            "VH",
            Space::Phase,
            table.clone(),
            Expr::zero(),
            [
                (
                    table.resolve("x").unwrap(),
                    parse_expr("eps*p_x", table).unwrap(),
                ),
                (
                    table.resolve("w").unwrap(),
                    parse_expr("exp(-w)*epsdot", table).unwrap(),
                ),
                (
                    table.resolve("p_w").unwrap(),
                    parse_expr("exp(-w)*epsdot*p_w", table).unwrap(),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn poisson_bracket_is_canonical() {
        let (_, map) = relativistic();
        let t = map.table();
        let x = Expr::sym(t.resolve("x").unwrap());
        let w = Expr::sym(t.resolve("w").unwrap());
        let p_x = Expr::sym(t.resolve("p_x").unwrap());
        let p_w = Expr::sym(t.resolve("p_w").unwrap());
        assert!(Expr::sub(&poisson_bracket(&x, &p_x, t).unwrap(), &Expr::one()).is_zero());
        assert!(poisson_bracket(&x, &p_w, t).unwrap().is_zero());
        assert!(poisson_bracket(&x, &w, t).unwrap().is_zero());
        // antisymmetry on a nontrivial pair
        let g = parse_expr("exp(-w)*epsdot*p_w + 1/2*eps*(p_x^2 - m^2)", t).unwrap();
        let fwd = poisson_bracket(&p_w, &g, t).unwrap();
        let bwd = poisson_bracket(&g, &p_w, t).unwrap();
        assert!(Expr::add2(&fwd, &bwd).is_zero());
        let want = parse_expr("exp(-w)*epsdot*p_w", t).unwrap();
        assert!(Expr::sub(&fwd, &want).is_zero());
        // velocities are not phase-space symbols
        let xdot = Expr::sym(t.resolve("xdot").unwrap());
        assert!(poisson_bracket(&xdot, &p_x, t).is_err());
    }

    #[test]
    fn evolution_forms_agree_and_match_hand_values() {
        let (model, map) = relativistic();
        let t = map.table().clone();
        let k = Evolution::new(&model, &map);
        let chi = parse_expr("1/2*exp(w)*m^2 - 1/2*exp(-w)*xdot^2", &t).unwrap();
        // the primary constraint evolves into the velocity-space constraint
        let phi = parse_expr("p_w", &t).unwrap();
        assert!(Expr::sub(&k.apply(&phi).unwrap(), &chi).is_zero());
        // the next level: minus the Hamiltonian evolves into wdot * chi
        let minus_h = parse_expr("-1/2*exp(w)*(p_x^2 - m^2)", &t).unwrap();
        let want = parse_expr("wdot*(1/2*exp(w)*m^2 - 1/2*exp(-w)*xdot^2)", &t).unwrap();
        assert!(Expr::sub(&k.apply(&minus_h).unwrap(), &want).is_zero());
        // all three presentations agree on assorted functions
        for src in [
            "p_w",
            "-1/2*exp(w)*(p_x^2 - m^2)",
            "x*p_w + eps*p_x",
            "exp(w)*p_x^2 + m*x",
            "epsdot*p_x*p_w + w*x",
        ] {
            let h = parse_expr(src, &t).unwrap();
            let direct = k.apply(&h).unwrap();
            let el = k.apply_el_form(&h).unwrap();
            let ham = k.apply_h_form(&h).unwrap();
            assert!(
                Expr::sub(&direct, &el).is_zero(),
                "el form differs on {src}"
            );
            assert!(
                Expr::sub(&direct, &ham).is_zero(),
                "h form differs on {src}"
            );
        }
    }

    #[test]
    fn commutator_with_the_evolution_field_tracks_the_multiplier() {
        let (_, map) = relativistic();
        let t = map.table().clone();
        let lambda = Symbol::free_parameter("lambda");
        let xh = hamiltonian_field(&map, &[Expr::sym(lambda.clone())]).unwrap();
        // hand check of the field itself
        assert!(Expr::sub(
            &xh.component(&t.resolve("x").unwrap()),
            &parse_expr("exp(w)*p_x", &t).unwrap()
        )
        .is_zero());
        assert!(Expr::sub(
            &xh.component(&t.resolve("w").unwrap()),
            &Expr::sym(lambda.clone())
        )
        .is_zero());
        assert!(xh.component(&t.resolve("p_x").unwrap()).is_zero());
        assert!(Expr::sub(
            &xh.component(&t.resolve("p_w").unwrap()),
            &parse_expr("-1/2*exp(w)*(p_x^2 - m^2)", &t).unwrap()
        )
        .is_zero());
        let vh = phase_variation(&t);
        let bracket = vh.lie_bracket(&xh).unwrap();
        assert!(bracket.time_component().is_zero());
        assert!(bracket.component(&t.resolve("x").unwrap()).is_zero());
        assert!(bracket.component(&t.resolve("p_x").unwrap()).is_zero());
        // the w component records the unknown action of VH on lambda
        let unknown = Expr::sym(Symbol::opaque_application("VH", &lambda));
        let lam = Expr::sym(lambda.clone());
        let eps_dot = Expr::sym(t.resolve("epsdot").unwrap());
        let eps_ddot = Expr::sym(t.resolve("epsddot").unwrap());
        let exp_neg_w = parse_expr("exp(-w)", &t).unwrap();
        let want_w = Expr::add2(
            &Expr::mul2(
                &exp_neg_w,
                &Expr::sub(&Expr::mul2(&lam, &eps_dot), &eps_ddot),
            ),
            &unknown,
        );
        assert!(Expr::sub(&bracket.component(&t.resolve("w").unwrap()), &want_w).is_zero());
        let p_w = Expr::sym(t.resolve("p_w").unwrap());
        let want_pw = Expr::mul2(
            &p_w,
            &Expr::mul2(
                &exp_neg_w,
                &Expr::sub(&Expr::mul2(&lam, &eps_dot), &eps_ddot),
            ),
        );
        assert!(Expr::sub(&bracket.component(&t.resolve("p_w").unwrap()), &want_pw).is_zero());
    }

    #[test]
    fn kernel_fields_annihilate_projectable_functions() {
        let (model, map) = relativistic();
        let t = map.table().clone();
        let gamma = kernel_field(&map, 0).unwrap();
        // the kernel direction is the undetermined velocity
        assert!(Expr::sub(&gamma.component(&t.resolve("wdot").unwrap()), &Expr::one()).is_zero());
        // energy is constant along the kernel
        let energy = parse_expr("1/2*exp(-w)*xdot^2 - 1/2*exp(w)*m^2", &t).unwrap();
        assert!(gamma.apply(&energy).unwrap().is_zero());
        // momenta are constant along the kernel
        for p_hat in model.momenta() {
            assert!(gamma.apply(p_hat).unwrap().is_zero());
        }
        // a function of the undetermined velocity is not
        let wdot = Expr::sym(t.resolve("wdot").unwrap());
        assert!(Expr::sub(&gamma.apply(&wdot).unwrap(), &Expr::one()).is_zero());
    }

    #[test]
    fn prolongation_differs_from_the_variation_by_equations_of_motion() {
        let (model, map) = relativistic();
        let t = map.table().clone();
        let vl = VectorField::new(
            "VL",
            Space::Velocity,
            t.clone(),
            Expr::zero(),
            [
                (
                    t.resolve("x").unwrap(),
                    parse_expr("exp(-w)*eps*xdot", &t).unwrap(),
                ),
                (
                    t.resolve("w").unwrap(),
                    parse_expr("exp(-w)*epsdot", &t).unwrap(),
                ),
                (
                    t.resolve("xdot").unwrap(),
                    parse_expr("exp(-w)*epsdot*xdot", &t).unwrap(),
                ),
                (
                    t.resolve("wdot").unwrap(),
                    parse_expr("exp(-w)*(epsddot - epsdot*wdot)", &t).unwrap(),
                ),
            ],
        )
        .unwrap();
        let bar = bar_extension(&vl, &model).unwrap();
        // coordinate components survive unchanged
        for q in t.coordinates() {
            assert!(Expr::sub(&bar.component(q), &vl.component(q)).is_zero());
        }
        // the xdot component changes by -eps times the x equation of motion
        let diff_x = Expr::sub(
            &bar.component(&t.resolve("xdot").unwrap()),
            &vl.component(&t.resolve("xdot").unwrap()),
        );
        let eps = Expr::sym(t.resolve("eps").unwrap());
        let want = Expr::neg(&Expr::mul2(&eps, &model.euler_lagrange()[0]));
        assert!(Expr::sub(&diff_x, &want).is_zero());
        // the w variation has no velocity dependence, so its prolonged
        // component is the variation's own wdot component
        let diff_w = Expr::sub(
            &bar.component(&t.resolve("wdot").unwrap()),
            &vl.component(&t.resolve("wdot").unwrap()),
        );
        assert!(diff_w.is_zero());
    }

    #[test]
    fn spaces_are_enforced() {
        let (model, map) = relativistic();
        let t = map.table().clone();
        let xh = hamiltonian_field(&map, &[Expr::zero()]).unwrap();
        let xdot = Expr::sym(t.resolve("xdot").unwrap());
        assert!(xh.apply(&xdot).is_err());
        let xl = lagrangian_field(&model, &[Expr::zero(), Expr::zero()]).unwrap();
        let p_x = Expr::sym(t.resolve("p_x").unwrap());
        assert!(xl.apply(&p_x).is_err());
        assert!(xl.lie_bracket(&xh).is_err());
        // component validation
        assert!(VectorField::new(
            "bad",
            Space::Phase,
            t.clone(),
            Expr::zero(),
            [(t.resolve("x").unwrap(), xdot.clone())],
        )
        .is_err());
        assert!(VectorField::new(
            "bad",
            Space::Phase,
            t.clone(),
            Expr::zero(),
            [(t.resolve("xdot").unwrap(), Expr::one())],
        )
        .is_err());
        // multiplier and acceleration counts
        assert!(hamiltonian_field(&map, &[]).is_err());
        assert!(lagrangian_field(&model, &[Expr::zero()]).is_err());
    }
}
