//! Report assembly: runs the requested checks and renders the outcome as
//! a machine-readable JSON document and a human-readable text document
//! with the same content.
//!
//! Every expression that ends up in a report goes through one `Printer`,
//! which records the printed string next to the canonical object. That
//! registry backs the round-trip guarantee: printed expressions re-parse
//! to structurally equal objects.

use std::fs;
use std::path::{Path, PathBuf};

use noether_core::constraints::StepOutcome;
use noether_core::noether::{
    analyze_generator, solve_gauge_generator, structure_functions, ConditionWitness,
    GeneratorCandidate, NoetherReport, StructureReport,
};
use noether_core::parse::parse_expr;
use noether_core::{Analysis, CoreError, Expr, Symbol};
use serde::Serialize;

use crate::declaration::LoadedSystem;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Maximum chain depth the gauge solver retries up to when a shallower
/// ansatz leaves an obstruction.
const MAX_GAUGE_DEPTH: u32 = 3;

/// Records every printed expression next to its canonical form.
#[derive(Default)]
pub struct Printer {
    expressions: Vec<(String, Expr)>,
}

impl Printer {
    fn expr(&mut self, e: &Expr) -> String {
        let s = e.to_string();
        self.expressions.push((s.clone(), e.clone()));
        s
    }

    fn exprs(&mut self, es: &[Expr]) -> Vec<String> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    fn symbol(&mut self, s: &Symbol) -> String {
        self.expr(&Expr::sym(s.clone()))
    }
}

/// The checks one invocation runs: named generator candidates and named
/// gauge seeds, declaration entries first, command-line additions after.
pub struct Requests {
    pub generators: Vec<(String, Expr)>,
    pub gauge_seeds: Vec<(String, Expr)>,
}

/// Requests coming from the declaration file alone.
pub fn declared_requests(loaded: &LoadedSystem) -> Result<Requests, CoreError> {
    let table = loaded.model.table();
    let mut generators = Vec::new();
    for g in &loaded.declaration.generators {
        generators.push((g.name.clone(), parse_expr(&g.expression, table)?));
    }
    let mut gauge_seeds = Vec::new();
    for (i, src) in loaded.declaration.gauge_seeds.iter().enumerate() {
        gauge_seeds.push((format!("seed-{i}"), parse_expr(src, table)?));
    }
    Ok(Requests {
        generators,
        gauge_seeds,
    })
}

#[derive(Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub system: SystemEcho,
    pub derivation: DerivationEcho,
    pub generators: Vec<GeneratorEcho>,
    pub gauge: Vec<GaugeEcho>,
    /// Structure functions over the verified symmetry generators; absent
    /// with fewer than two of them.
    pub structure: Option<StructureEcho>,
    pub warnings: Vec<WarningEcho>,
    pub summary: Summary,
}

#[derive(Serialize)]
pub struct SystemEcho {
    pub name: String,
    pub coordinates: Vec<String>,
    pub parameters: Vec<String>,
    pub gauge_functions: Vec<String>,
    pub lagrangian: String,
    pub options: OptionsEcho,
}

#[derive(Serialize)]
pub struct OptionsEcho {
    pub max_stabilization_depth: u32,
    pub ansatz_degree: u32,
    pub probe_seed: u64,
    pub probe_points: u32,
}

#[derive(Serialize)]
pub struct DerivationEcho {
    pub momenta: Vec<String>,
    pub hessian: Vec<Vec<String>>,
    /// Null vectors of the Hessian, one row per kernel direction; the
    /// corresponding kernel vector fields act along these components.
    pub hessian_kernel: Vec<Vec<String>>,
    pub alpha: Vec<String>,
    pub euler_lagrange: Vec<String>,
    pub hamiltonian: String,
    /// Pull-back of the Hamiltonian minus the energy; zero certifies the
    /// canonical Hamiltonian.
    pub energy_residual: String,
    pub energy_matches: bool,
    pub primary_constraints: Vec<String>,
    pub hamiltonian_constraint_levels: Vec<Vec<String>>,
    pub multipliers: Vec<String>,
    pub determined_multipliers: Vec<MultiplierEcho>,
    pub stabilization_steps: Vec<StabilizationStepEcho>,
    pub lagrangian_constraint_levels: Vec<Vec<String>>,
    pub velocity_multipliers: Vec<String>,
    pub free_accelerations: Vec<String>,
    pub constraints_restrict_configuration_only: bool,
}

#[derive(Serialize)]
pub struct MultiplierEcho {
    pub multiplier: String,
    pub value: String,
}

#[derive(Serialize)]
pub struct StabilizationStepEcho {
    pub level: usize,
    pub residue: String,
    pub outcome: String,
    pub new_constraint: Option<String>,
    pub determined: Option<MultiplierEcho>,
}

#[derive(Serialize)]
pub struct GeneratorEcho {
    pub name: String,
    pub generator: String,
    pub conserved: String,
    pub verdict: String,
    pub phase_delta_q: Vec<String>,
    pub phase_delta_p: Vec<String>,
    pub velocity_delta_q: Vec<String>,
    pub velocity_delta_qdot: Vec<String>,
    pub k_condition: KConditionEcho,
    pub phase_space: PhaseSpaceEcho,
    pub commutation: CommutationEcho,
    pub velocity_space: VelocityEcho,
    pub variational: VariationalEcho,
}

#[derive(Serialize)]
pub struct WitnessEcho {
    pub input: String,
    pub normal_form: String,
    pub combination: Vec<String>,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct KConditionEcho {
    pub verdict: String,
    pub image: String,
    pub redefinition: String,
    pub residual: String,
    pub combination: Option<Vec<String>>,
}

#[derive(Serialize)]
pub struct PhaseSpaceEcho {
    pub verdict: String,
    pub primary_brackets: Vec<WitnessEcho>,
    pub evolution_bracket: WitnessEcho,
    pub redefinition: String,
}

#[derive(Serialize)]
pub struct PairEcho {
    pub function: String,
    pub difference: String,
}

#[derive(Serialize)]
pub struct CommutationEcho {
    pub verdict: String,
    pub differences: Vec<PairEcho>,
    pub random_failures: u32,
    pub random_count: u32,
    pub pull_back_differences: Vec<PairEcho>,
    pub gradient_identities_ok: bool,
}

#[derive(Serialize)]
pub struct VelocityEcho {
    pub verdict: String,
    pub projectability_failures: Vec<String>,
    pub projectability_pass: bool,
    pub kernel_closure: Vec<Vec<String>>,
    pub kernel_closure_pass: bool,
    pub tangency: Vec<WitnessEcho>,
    pub kernel_coefficients: Vec<String>,
    pub decomposition_residuals: Vec<String>,
    pub decomposition_pass: bool,
    pub velocity_gradient_vanishes: bool,
    pub coordinate_gradient_vanishes: bool,
    pub coordinate_gradient_weakly_vanishes: bool,
    pub sufficiency_gap: bool,
}

#[derive(Serialize)]
pub struct VariationalEcho {
    pub verdict: String,
    pub variation: String,
    pub boundary: String,
    pub residual: String,
    pub identity_ok: bool,
}

#[derive(Serialize)]
pub struct GaugeEcho {
    pub name: String,
    pub seed: String,
    pub depth: u32,
    pub generator: Option<String>,
    pub parts: Vec<String>,
    pub scaling: Option<String>,
    pub redefinition: Option<String>,
    pub verdict: Option<String>,
    pub obstruction: Option<String>,
}

#[derive(Serialize)]
pub struct StructureEcho {
    pub members: Vec<String>,
    pub pairs: Vec<StructurePairEcho>,
    pub all_constant: bool,
    pub fields_close: Option<bool>,
}

#[derive(Serialize)]
pub struct StructurePairEcho {
    pub i: usize,
    pub j: usize,
    pub action: String,
    pub coefficients: Option<Vec<String>>,
    pub projection_ok: bool,
}

#[derive(Serialize)]
pub struct WarningEcho {
    pub kind: String,
    pub detail: String,
    pub expression: Option<String>,
}

#[derive(Serialize)]
pub struct Summary {
    pub verdicts: Vec<VerdictEcho>,
    pub all_pass: bool,
}

#[derive(Serialize)]
pub struct VerdictEcho {
    pub name: String,
    pub verdict: String,
}

/// The assembled report plus the print registry backing the round-trip
/// guarantee.
pub struct BuiltReport {
    pub report: Report,
    // consumed by the round-trip test, not by the binary
    #[cfg_attr(not(test), allow(dead_code))]
    pub expressions: Vec<(String, Expr)>,
}

impl BuiltReport {
    pub fn all_pass(&self) -> bool {
        self.report.summary.all_pass
    }
}

pub fn build_report(
    loaded: &LoadedSystem,
    analysis: &Analysis<'_>,
    requests: &Requests,
) -> Result<BuiltReport, CliError> {
    let mut p = Printer::default();
    let ctx = analysis.context();
    let model = &loaded.model;
    let map = &loaded.map;

    let system = SystemEcho {
        name: loaded.declaration.name.clone(),
        coordinates: loaded.declaration.coordinates.clone(),
        parameters: loaded.declaration.parameters.clone(),
        gauge_functions: loaded.declaration.gauge_functions.clone(),
        lagrangian: p.expr(model.lagrangian()),
        options: OptionsEcho {
            max_stabilization_depth: analysis.options().max_stabilization_depth,
            ansatz_degree: analysis.options().ansatz_degree,
            probe_seed: analysis.options().probe_seed,
            probe_points: analysis.options().probe_points,
        },
    };

    let n = model.dim();
    let mut hessian = Vec::new();
    for r in 0..n {
        let mut row = Vec::new();
        for c in 0..n {
            row.push(p.expr(model.hessian().get(r, c)));
        }
        hessian.push(row);
    }
    let hessian_kernel = map.gamma().iter().map(|row| p.exprs(row)).collect();
    let energy_residual = analysis.hamiltonian_energy_residual()?;
    let stabilization = analysis.stabilization();
    let stabilization_steps = stabilization
        .steps
        .iter()
        .map(|s| {
            let (outcome, new_constraint, determined) = match &s.outcome {
                StepOutcome::Stable => ("stable", None, None),
                StepOutcome::NewConstraint(e) => ("new-constraint", Some(p.expr(e)), None),
                StepOutcome::Determined { multiplier, value } => (
                    "determined",
                    None,
                    Some(MultiplierEcho {
                        multiplier: p.symbol(multiplier),
                        value: p.expr(value),
                    }),
                ),
            };
            StabilizationStepEcho {
                level: s.level,
                residue: p.expr(&s.residue),
                outcome: outcome.to_owned(),
                new_constraint,
                determined,
            }
        })
        .collect();

    let derivation = DerivationEcho {
        momenta: p.exprs(model.momenta()),
        hessian,
        hessian_kernel,
        alpha: p.exprs(model.alpha()),
        euler_lagrange: p.exprs(model.euler_lagrange()),
        hamiltonian: p.expr(map.hamiltonian()),
        energy_matches: energy_residual.is_zero(),
        energy_residual: p.expr(&energy_residual),
        primary_constraints: p.exprs(map.primary_constraints()),
        hamiltonian_constraint_levels: stabilization
            .set
            .levels()
            .iter()
            .map(|level| p.exprs(level))
            .collect(),
        multipliers: ctx.multipliers().iter().map(|m| p.symbol(m)).collect(),
        determined_multipliers: stabilization
            .determined
            .iter()
            .map(|(m, v)| MultiplierEcho {
                multiplier: p.symbol(m),
                value: p.expr(v),
            })
            .collect(),
        stabilization_steps,
        lagrangian_constraint_levels: analysis
            .lagrangian_constraints()
            .levels()
            .iter()
            .map(|level| p.exprs(level))
            .collect(),
        velocity_multipliers: p.exprs(map.v_multipliers()),
        free_accelerations: ctx
            .free_accelerations()
            .iter()
            .map(|a| p.symbol(a))
            .collect(),
        constraints_restrict_configuration_only: analysis.constraints_restrict_configuration_only(),
    };

    // named candidates, declaration order, then gauge reconstructions
    let mut generator_echoes = Vec::new();
    let mut passing: Vec<(String, GeneratorCandidate)> = Vec::new();
    let mut verdicts = Vec::new();
    for (name, expr) in &requests.generators {
        let cand = GeneratorCandidate::new(ctx, expr.clone())?;
        let noether = analyze_generator(ctx, &cand)?;
        let verdict = noether.verdict();
        generator_echoes.push(generator_echo(&mut p, name, &cand, &noether));
        verdicts.push(VerdictEcho {
            name: name.clone(),
            verdict: verdict.to_string(),
        });
        if verdict.passed() {
            passing.push((name.clone(), cand));
        }
    }

    let mut gauge_echoes = Vec::new();
    for (name, seed) in &requests.gauge_seeds {
        let mut outcome = None;
        let mut obstruction = String::new();
        let mut depth = 0;
        for d in 1..=MAX_GAUGE_DEPTH {
            depth = d;
            match solve_gauge_generator(ctx, seed, d) {
                Ok(sol) => {
                    outcome = Some(sol);
                    break;
                }
                Err(CoreError::AnsatzFailed(message)) => obstruction = message,
                Err(e) => return Err(e.into()),
            }
        }
        match outcome {
            Some(sol) => {
                let cand = GeneratorCandidate::new(ctx, sol.generator.clone())?;
                let noether = analyze_generator(ctx, &cand)?;
                let verdict = noether.verdict();
                gauge_echoes.push(GaugeEcho {
                    name: name.clone(),
                    seed: p.expr(seed),
                    depth,
                    generator: Some(p.expr(&sol.generator)),
                    parts: p.exprs(&sol.parts),
                    scaling: Some(p.expr(&sol.scaling)),
                    redefinition: Some(p.expr(&sol.redefinition)),
                    verdict: Some(verdict.to_string()),
                    obstruction: None,
                });
                generator_echoes.push(generator_echo(&mut p, name, &cand, &noether));
                verdicts.push(VerdictEcho {
                    name: name.clone(),
                    verdict: verdict.to_string(),
                });
                if verdict.passed() {
                    passing.push((name.clone(), cand));
                }
            }
            None => {
                gauge_echoes.push(GaugeEcho {
                    name: name.clone(),
                    seed: p.expr(seed),
                    depth,
                    generator: None,
                    parts: Vec::new(),
                    scaling: None,
                    redefinition: None,
                    verdict: None,
                    obstruction: Some(obstruction),
                });
                verdicts.push(VerdictEcho {
                    name: name.clone(),
                    verdict: "FAIL".to_owned(),
                });
            }
        }
    }

    let structure = if passing.len() >= 2 {
        let members: Vec<String> = passing.iter().map(|(name, _)| name.clone()).collect();
        let cands: Vec<GeneratorCandidate> = passing.into_iter().map(|(_, c)| c).collect();
        let s = structure_functions(ctx, &cands)?;
        Some(structure_echo(&mut p, members, &s))
    } else {
        None
    };

    let mut warnings = Vec::new();
    for w in map.warnings() {
        warnings.push(WarningEcho {
            kind: "assumed-nonzero-pivot".to_owned(),
            detail: format!(
                "row {}, column {} of the momentum inversion assumed a nonzero pivot",
                w.row, w.col
            ),
            expression: Some(p.expr(&w.pivot)),
        });
    }
    if analysis.constraints_restrict_configuration_only() {
        warnings.push(WarningEcho {
            kind: "constraints-restrict-configuration-only".to_owned(),
            detail: "the primary velocity constraints restrict configuration variables alone; \
                     tangency of an induced field cannot certify an exact symmetry"
                .to_owned(),
            expression: None,
        });
    }

    let all_pass = verdicts.iter().all(|v| v.verdict == "PASS");
    let report = Report {
        schema_version: SCHEMA_VERSION,
        system,
        derivation,
        generators: generator_echoes,
        gauge: gauge_echoes,
        structure,
        warnings,
        summary: Summary { verdicts, all_pass },
    };
    Ok(BuiltReport {
        report,
        expressions: p.expressions,
    })
}

fn witness_echo(p: &mut Printer, w: &ConditionWitness) -> WitnessEcho {
    WitnessEcho {
        input: p.expr(&w.input),
        normal_form: p.expr(&w.normal_form),
        combination: p.exprs(&w.combination),
        pass: w.pass,
    }
}

fn pair_echoes(p: &mut Printer, pairs: &[(Expr, Expr)]) -> Vec<PairEcho> {
    pairs
        .iter()
        .map(|(function, difference)| PairEcho {
            function: p.expr(function),
            difference: p.expr(difference),
        })
        .collect()
}

fn generator_echo(
    p: &mut Printer,
    name: &str,
    cand: &GeneratorCandidate,
    noether: &NoetherReport,
) -> GeneratorEcho {
    let k = &noether.k_condition;
    let ph = &noether.phase_space;
    let c = &noether.commutation;
    let v = &noether.velocity_space;
    let b = &noether.bar_delta;
    GeneratorEcho {
        name: name.to_owned(),
        generator: p.expr(cand.generator()),
        conserved: p.expr(cand.conserved_quantity()),
        verdict: noether.verdict().to_string(),
        phase_delta_q: p.exprs(cand.phase_delta_q()),
        phase_delta_p: p.exprs(cand.phase_delta_p()),
        velocity_delta_q: p.exprs(cand.velocity_delta_q()),
        velocity_delta_qdot: p.exprs(cand.velocity_delta_qdot()),
        k_condition: KConditionEcho {
            verdict: k.verdict.to_string(),
            image: p.expr(&k.image),
            redefinition: p.expr(&k.redefinition),
            residual: p.expr(&k.residual),
            combination: k.combination.as_ref().map(|combo| p.exprs(combo)),
        },
        phase_space: PhaseSpaceEcho {
            verdict: ph.verdict.to_string(),
            primary_brackets: ph
                .primary_brackets
                .iter()
                .map(|w| witness_echo(p, w))
                .collect(),
            evolution_bracket: witness_echo(p, &ph.evolution_bracket),
            redefinition: p.expr(&ph.redefinition),
        },
        commutation: CommutationEcho {
            verdict: c.verdict.to_string(),
            differences: pair_echoes(p, &c.differences),
            random_failures: c.random_failures,
            random_count: c.random_count,
            pull_back_differences: pair_echoes(p, &c.pull_back_differences),
            gradient_identities_ok: c.gradient_identities_ok,
        },
        velocity_space: VelocityEcho {
            verdict: v.verdict.to_string(),
            projectability_failures: p.exprs(&v.projectability_failures),
            projectability_pass: v.projectability_pass,
            kernel_closure: v.kernel_closure.iter().map(|row| p.exprs(row)).collect(),
            kernel_closure_pass: v.kernel_closure_pass,
            tangency: v.tangency.iter().map(|w| witness_echo(p, w)).collect(),
            kernel_coefficients: p.exprs(&v.kernel_coefficients),
            decomposition_residuals: p.exprs(&v.decomposition_residuals),
            decomposition_pass: v.decomposition_pass,
            velocity_gradient_vanishes: v.velocity_gradient_vanishes,
            coordinate_gradient_vanishes: v.coordinate_gradient_vanishes,
            coordinate_gradient_weakly_vanishes: v.coordinate_gradient_weakly_vanishes,
            sufficiency_gap: v.sufficiency_gap,
        },
        variational: VariationalEcho {
            verdict: b.verdict.to_string(),
            variation: p.expr(&b.variation),
            boundary: p.expr(&b.boundary),
            residual: p.expr(&b.residual),
            identity_ok: b.identity_ok,
        },
    }
}

fn structure_echo(p: &mut Printer, members: Vec<String>, s: &StructureReport) -> StructureEcho {
    StructureEcho {
        members,
        pairs: s
            .pairs
            .iter()
            .map(|pair| StructurePairEcho {
                i: pair.i,
                j: pair.j,
                action: p.expr(&pair.action),
                coefficients: pair.coefficients.as_ref().map(|c| p.exprs(c)),
                projection_ok: pair.projection_ok,
            })
            .collect(),
        all_constant: s.all_constant,
        fields_close: s.fields_close,
    }
}

pub fn to_json(report: &Report) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Report(format!("report serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn push_list(out: &mut String, label: &str, items: &[String]) {
    out.push_str(&format!("  {label}:"));
    if items.is_empty() {
        out.push_str(" none");
    }
    out.push('\n');
    for item in items {
        out.push_str(&format!("    - {item}\n"));
    }
}

fn push_witness(out: &mut String, label: &str, w: &WitnessEcho) {
    out.push_str(&format!(
        "    {label}: {}\n      input: {}\n      normal form: {}\n",
        if w.pass { "holds weakly" } else { "fails" },
        w.input,
        w.normal_form
    ));
    for (i, c) in w.combination.iter().enumerate() {
        out.push_str(&format!("      combination[{i}]: {c}\n"));
    }
}

/// Human-readable rendering with the same content as the JSON document.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let s = &report.system;
    out.push_str(&format!(
        "schema version {}\nsystem: {}\n",
        report.schema_version, s.name
    ));
    push_list(&mut out, "coordinates", &s.coordinates);
    push_list(&mut out, "parameters", &s.parameters);
    push_list(&mut out, "gauge functions", &s.gauge_functions);
    out.push_str(&format!("  lagrangian: {}\n", s.lagrangian));
    out.push_str(&format!(
        "  options: max stabilization depth {}, ansatz degree {}, probe seed {}, probe points {}\n",
        s.options.max_stabilization_depth,
        s.options.ansatz_degree,
        s.options.probe_seed,
        s.options.probe_points
    ));

    let d = &report.derivation;
    out.push_str("\nderivation\n");
    push_list(&mut out, "momenta", &d.momenta);
    out.push_str("  hessian:\n");
    for row in &d.hessian {
        out.push_str(&format!("    [ {} ]\n", row.join(", ")));
    }
    out.push_str("  hessian kernel:\n");
    for row in &d.hessian_kernel {
        out.push_str(&format!("    [ {} ]\n", row.join(", ")));
    }
    push_list(&mut out, "alpha", &d.alpha);
    push_list(&mut out, "euler-lagrange", &d.euler_lagrange);
    out.push_str(&format!("  hamiltonian: {}\n", d.hamiltonian));
    out.push_str(&format!(
        "  energy residual: {} ({})\n",
        d.energy_residual,
        if d.energy_matches {
            "matches the energy"
        } else {
            "does not match the energy"
        }
    ));
    push_list(&mut out, "primary constraints", &d.primary_constraints);
    for (i, level) in d.hamiltonian_constraint_levels.iter().enumerate() {
        push_list(
            &mut out,
            &format!("hamiltonian constraints, level {i}"),
            level,
        );
    }
    push_list(&mut out, "multipliers", &d.multipliers);
    for m in &d.determined_multipliers {
        out.push_str(&format!(
            "  determined multiplier: {} = {}\n",
            m.multiplier, m.value
        ));
    }
    for step in &d.stabilization_steps {
        out.push_str(&format!(
            "  stabilization level {}: residue {} -> {}",
            step.level, step.residue, step.outcome
        ));
        if let Some(c) = &step.new_constraint {
            out.push_str(&format!(" {c}"));
        }
        if let Some(m) = &step.determined {
            out.push_str(&format!(" {} = {}", m.multiplier, m.value));
        }
        out.push('\n');
    }
    for (i, level) in d.lagrangian_constraint_levels.iter().enumerate() {
        push_list(
            &mut out,
            &format!("lagrangian constraints, level {i}"),
            level,
        );
    }
    push_list(&mut out, "velocity multipliers", &d.velocity_multipliers);
    push_list(&mut out, "free accelerations", &d.free_accelerations);
    out.push_str(&format!(
        "  constraints restrict configuration only: {}\n",
        d.constraints_restrict_configuration_only
    ));

    for g in &report.generators {
        out.push_str(&format!("\ngenerator {}: {}\n", g.name, g.verdict));
        out.push_str(&format!("  generator: {}\n", g.generator));
        out.push_str(&format!("  conserved quantity: {}\n", g.conserved));
        push_list(&mut out, "phase delta q", &g.phase_delta_q);
        push_list(&mut out, "phase delta p", &g.phase_delta_p);
        push_list(&mut out, "velocity delta q", &g.velocity_delta_q);
        push_list(&mut out, "velocity delta qdot", &g.velocity_delta_qdot);

        let k = &g.k_condition;
        out.push_str(&format!("  defining condition: {}\n", k.verdict));
        out.push_str(&format!("    image: {}\n", k.image));
        out.push_str(&format!("    redefinition: {}\n", k.redefinition));
        out.push_str(&format!("    residual: {}\n", k.residual));
        if let Some(combo) = &k.combination {
            for (i, c) in combo.iter().enumerate() {
                out.push_str(&format!("    constraint combination[{i}]: {c}\n"));
            }
        }

        let ph = &g.phase_space;
        out.push_str(&format!("  phase space: {}\n", ph.verdict));
        for (i, w) in ph.primary_brackets.iter().enumerate() {
            push_witness(&mut out, &format!("primary bracket {i}"), w);
        }
        push_witness(&mut out, "evolution bracket", &ph.evolution_bracket);
        out.push_str(&format!("    redefinition: {}\n", ph.redefinition));

        let c = &g.commutation;
        out.push_str(&format!("  commutation: {}\n", c.verdict));
        for pair in &c.differences {
            out.push_str(&format!(
                "    difference at {}: {}\n",
                pair.function, pair.difference
            ));
        }
        out.push_str(&format!(
            "    random probes: {} failures of {}\n",
            c.random_failures, c.random_count
        ));
        for pair in &c.pull_back_differences {
            out.push_str(&format!(
                "    pull-back mismatch at {}: {}\n",
                pair.function, pair.difference
            ));
        }
        out.push_str(&format!(
            "    gradient identities: {}\n",
            if c.gradient_identities_ok {
                "ok"
            } else {
                "VIOLATED"
            }
        ));

        let v = &g.velocity_space;
        out.push_str(&format!("  velocity space: {}\n", v.verdict));
        out.push_str(&format!(
            "    projectability: {}\n",
            if v.projectability_pass { "ok" } else { "fails" }
        ));
        for e in &v.projectability_failures {
            out.push_str(&format!("      nonzero kernel derivative: {e}\n"));
        }
        out.push_str(&format!(
            "    kernel closure: {}\n",
            if v.kernel_closure_pass { "ok" } else { "fails" }
        ));
        for row in &v.kernel_closure {
            out.push_str(&format!("      [ {} ]\n", row.join(", ")));
        }
        for (i, w) in v.tangency.iter().enumerate() {
            push_witness(&mut out, &format!("tangency {i}"), w);
        }
        for (i, c) in v.kernel_coefficients.iter().enumerate() {
            out.push_str(&format!("    kernel coefficient[{i}]: {c}\n"));
        }
        out.push_str(&format!(
            "    decomposition: {}\n",
            if v.decomposition_pass { "ok" } else { "fails" }
        ));
        for e in &v.decomposition_residuals {
            out.push_str(&format!("      residual: {e}\n"));
        }
        out.push_str(&format!(
            "    velocity gradient vanishes: {}\n    coordinate gradient vanishes: {}\n    \
             coordinate gradient weakly vanishes: {}\n    sufficiency gap: {}\n",
            v.velocity_gradient_vanishes,
            v.coordinate_gradient_vanishes,
            v.coordinate_gradient_weakly_vanishes,
            v.sufficiency_gap
        ));

        let b = &g.variational;
        out.push_str(&format!("  variational: {}\n", b.verdict));
        out.push_str(&format!("    variation: {}\n", b.variation));
        out.push_str(&format!("    boundary charge: {}\n", b.boundary));
        out.push_str(&format!("    residual: {}\n", b.residual));
        out.push_str(&format!(
            "    variational identity: {}\n",
            if b.identity_ok { "ok" } else { "VIOLATED" }
        ));
    }

    for g in &report.gauge {
        out.push_str(&format!(
            "\ngauge solution {} from seed {}\n",
            g.name, g.seed
        ));
        out.push_str(&format!("  depth: {}\n", g.depth));
        match &g.generator {
            Some(generator) => {
                out.push_str(&format!("  generator: {generator}\n"));
                for (i, part) in g.parts.iter().enumerate() {
                    out.push_str(&format!("  part[{i}]: {part}\n"));
                }
                if let Some(s) = &g.scaling {
                    out.push_str(&format!("  scaling: {s}\n"));
                }
                if let Some(r) = &g.redefinition {
                    out.push_str(&format!("  redefinition: {r}\n"));
                }
                if let Some(v) = &g.verdict {
                    out.push_str(&format!("  verdict: {v}\n"));
                }
            }
            None => {
                out.push_str(&format!(
                    "  no generator found: {}\n",
                    g.obstruction.as_deref().unwrap_or("unknown obstruction")
                ));
            }
        }
    }

    if let Some(structure) = &report.structure {
        out.push_str("\nstructure functions\n");
        push_list(&mut out, "members", &structure.members);
        for pair in &structure.pairs {
            out.push_str(&format!(
                "  action of {} on {}: {}\n",
                structure.members[pair.j], structure.members[pair.i], pair.action
            ));
            if let Some(coeffs) = &pair.coefficients {
                for (k, c) in coeffs.iter().enumerate() {
                    out.push_str(&format!("    coefficient[{k}]: {c}\n"));
                }
            } else {
                out.push_str("    coefficients: unresolved\n");
            }
            out.push_str(&format!(
                "    projection identity: {}\n",
                if pair.projection_ok { "ok" } else { "fails" }
            ));
        }
        out.push_str(&format!(
            "  all coefficients constant: {}\n",
            structure.all_constant
        ));
        if let Some(close) = structure.fields_close {
            out.push_str(&format!("  fields close on the family: {close}\n"));
        }
    }

    if !report.warnings.is_empty() {
        out.push_str("\nwarnings\n");
        for w in &report.warnings {
            out.push_str(&format!("  [{}] {}", w.kind, w.detail));
            if let Some(e) = &w.expression {
                out.push_str(&format!(": {e}"));
            }
            out.push('\n');
        }
    }

    out.push_str("\nsummary\n");
    for v in &report.summary.verdicts {
        out.push_str(&format!("  {}: {}\n", v.name, v.verdict));
    }
    out.push_str(&format!(
        "  overall: {}\n",
        if report.summary.all_pass {
            "all requested checks PASS"
        } else {
            "some requested checks did not PASS"
        }
    ));
    out
}

/// Lowercase alphanumeric slug of a system name, for report file names.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    let mut dash = true;
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
            dash = false;
        } else if !dash {
            out.push('-');
            dash = true;
        }
    }
    out.trim_end_matches('-').to_owned()
}

/// Writes the JSON and text renderings into `dir`, named after the system.
pub fn write_reports(dir: &Path, report: &Report) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let base = slug(&report.system.name);
    let json_path = dir.join(format!("{base}.report.json"));
    let text_path = dir.join(format!("{base}.report.txt"));
    fs::write(&json_path, to_json(report)?).map_err(|source| CliError::Io {
        path: json_path.clone(),
        source,
    })?;
    fs::write(&text_path, render_text(report)).map_err(|source| CliError::Io {
        path: text_path.clone(),
        source,
    })?;
    Ok((json_path, text_path))
}
