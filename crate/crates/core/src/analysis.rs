//! One-call orchestration: from a model and its fiber map to the full
//! constraint analysis and the shared symmetry-check context.

use alloc::vec::Vec;

use crate::calculus::diff;
use crate::constraints::{lagrangian_chain, stabilize, ConstraintSet, Stabilization};
use crate::error::CoreError;
use crate::expr::Expr;
use crate::legendre::LegendreMap;
use crate::model::SystemModel;
use crate::noether::NoetherContext;

/// Tunable knobs of the analysis pipeline.
#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Maximum total degree of the undetermined coefficients in weak-
    /// reduction ansatz matching.
    pub ansatz_degree: u32,
    /// Cap on the constraint stabilization loop.
    pub max_stabilization_depth: u32,
    /// Seed for the deterministic random probes.
    pub probe_seed: u64,
    /// Number of random probes in the commutation check.
    pub probe_points: u32,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            ansatz_degree: 4,
            max_stabilization_depth: 10,
            probe_seed: 0x9e3779b97f4a7c15,
            probe_points: 10,
        }
    }
}

/// The derived structure of one system: the symmetry-check context plus the
/// stabilized phase-space chain and its velocity-space transport.
pub struct Analysis<'a> {
    ctx: NoetherContext<'a>,
    stabilization: Stabilization,
    lagrangian_constraints: ConstraintSet,
    options: Options,
}

impl<'a> Analysis<'a> {
    pub fn build(
        model: &'a SystemModel,
        map: &'a LegendreMap,
        options: Options,
    ) -> Result<Self, CoreError> {
        let ctx = NoetherContext::with_options(
            model,
            map,
            options.ansatz_degree,
            options.probe_seed,
            options.probe_points,
        )?;
        let stabilization = stabilize(
            map,
            ctx.multipliers(),
            options.ansatz_degree,
            options.max_stabilization_depth,
        )?;
        let lagrangian_constraints =
            lagrangian_chain(model, map, &stabilization.set, options.ansatz_degree)?;
        Ok(Analysis {
            ctx,
            stabilization,
            lagrangian_constraints,
            options,
        })
    }

    pub fn context(&self) -> &NoetherContext<'a> {
        &self.ctx
    }

    pub fn model(&self) -> &SystemModel {
        self.ctx.model()
    }

    pub fn map(&self) -> &LegendreMap {
        self.ctx.map()
    }

    pub fn options(&self) -> Options {
        self.options
    }

    /// Full stabilized phase-space constraint chain with the step log.
    pub fn stabilization(&self) -> &Stabilization {
        &self.stabilization
    }

    /// Velocity-space transport of the stabilized chain.
    pub fn lagrangian_constraints(&self) -> &ConstraintSet {
        &self.lagrangian_constraints
    }

    /// Residual of the defining property of the canonical Hamiltonian: its
    /// pull-back must equal the energy function. Zero on a sound build.
    pub fn hamiltonian_energy_residual(&self) -> Result<Expr, CoreError> {
        let model = self.model();
        let table = model.table();
        let mut energy_parts = Vec::new();
        for (p_hat, v) in model.momenta().iter().zip(table.velocities()) {
            energy_parts.push(Expr::mul2(p_hat, &Expr::sym(v.clone())));
        }
        energy_parts.push(model.lagrangian().neg());
        let energy = Expr::add_slice(&energy_parts);
        Ok(Expr::sub(
            &self.map().pull_back(self.map().hamiltonian())?,
            &energy,
        ))
    }

    /// True when every primary velocity-space constraint is free of the
    /// velocities, restricting configuration variables alone. In that
    /// regime tangency of an induced field to the constraints stops being
    /// sufficient for an exact symmetry.
    pub fn constraints_restrict_configuration_only(&self) -> bool {
        let velocities = self.map().table().velocities();
        let primaries = self.ctx.lag_primaries().flat();
        !primaries.is_empty()
            && primaries
                .iter()
                .all(|chi| velocities.iter().all(|v| diff(chi, v).is_zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::StepOutcome;
    use crate::parse::parse_expr;
    use crate::symbol::SymbolTableBuilder;

    #[test]
    fn stabilization_of_the_relativistic_system_stops_at_one_secondary() {
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
        let analysis = Analysis::build(&model, &map, Options::default()).unwrap();

        let levels = analysis.stabilization().set.levels();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0].len(), 1);
        assert_eq!(levels[1].len(), 1);
        // the secondary is the Hamiltonian with a sign
        let want = map.hamiltonian().neg();
        assert!(Expr::sub(&levels[1][0], &want).is_zero());
        assert!(analysis.stabilization().determined.is_empty());
        assert!(analysis.hamiltonian_energy_residual().unwrap().is_zero());
        assert!(!analysis.constraints_restrict_configuration_only());
    }

    #[test]
    fn stabilization_of_the_auxiliary_system_fixes_the_multiplier() {
        let t = SymbolTableBuilder::new()
            .coordinate("x")
            .coordinate("y")
            .build()
            .unwrap();
        let l = parse_expr("1/2*xdot^2 - 1/2*y^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        let analysis = Analysis::build(&model, &map, Options::default()).unwrap();

        let levels = analysis.stabilization().set.levels();
        assert_eq!(levels.len(), 2);
        let want = parse_expr("-y", map.table()).unwrap();
        assert!(Expr::sub(&levels[1][0], &want).is_zero());
        assert_eq!(analysis.stabilization().determined.len(), 1);
        let fixed = analysis.stabilization().determined.values().next().unwrap();
        assert!(fixed.is_zero());
        assert!(analysis
            .stabilization()
            .steps
            .iter()
            .any(|s| matches!(s.outcome, StepOutcome::Determined { .. })));
        assert!(analysis.constraints_restrict_configuration_only());
    }

    #[test]
    fn regular_systems_have_an_empty_analysis() {
        let t = SymbolTableBuilder::new().coordinate("q").build().unwrap();
        let l = parse_expr("1/2*qdot^2", &t).unwrap();
        let model = SystemModel::new(t, l).unwrap();
        let map = LegendreMap::build(&model).unwrap();
        let analysis = Analysis::build(&model, &map, Options::default()).unwrap();
        assert!(analysis.stabilization().set.is_empty());
        assert!(analysis.stabilization().steps.is_empty());
        assert!(analysis.lagrangian_constraints().is_empty());
        assert!(analysis.hamiltonian_energy_residual().unwrap().is_zero());
        assert!(!analysis.constraints_restrict_configuration_only());
    }
}
