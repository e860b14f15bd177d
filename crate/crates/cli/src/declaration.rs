//! Declaration files: the schema a system is described in, and its
//! translation into the symbolic model.
//!
//! A declaration is a TOML document naming the coordinates, parameters,
//! and Lagrangian of a first-order system, plus optional cross-check data
//! (a Hamiltonian, primary constraints), generator candidates, and gauge
//! seeds. Everything textual is parsed under one symbol table built from
//! the declared names; caller-supplied Hamiltonians and constraints are
//! verified against the derived ones, never trusted.

use std::fs;
use std::path::Path;

use noether_core::legendre::LegendreMap;
use noether_core::model::SystemModel;
use noether_core::parse::parse_expr;
use noether_core::symbol::SymbolTableBuilder;
use noether_core::Expr;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDeclaration {
    pub name: String,
    pub coordinates: Vec<String>,
    #[serde(default)]
    pub parameters: Vec<String>,
    /// Gauge-function bases usable in generator expressions and gauge
    /// solutions; `eps` when absent.
    #[serde(default = "default_gauge_functions")]
    pub gauge_functions: Vec<String>,
    pub lagrangian: String,
    /// Optional Hamiltonian to cross-check against the derived one; it
    /// must agree on the image of the fiber map.
    pub hamiltonian: Option<String>,
    /// Optional primary constraints to cross-check: they must pull back
    /// to zero, be independent, and match the kernel dimension.
    pub primary_constraints: Option<Vec<String>>,
    #[serde(default)]
    pub generators: Vec<GeneratorDeclaration>,
    /// Primary-constraint combinations to seed the gauge-generator solver.
    #[serde(default)]
    pub gauge_seeds: Vec<String>,
    #[serde(default)]
    pub options: DeclaredOptions,
}

fn default_gauge_functions() -> Vec<String> {
    vec!["eps".to_owned()]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDeclaration {
    pub name: String,
    pub expression: String,
}

/// Per-file analysis knobs; command-line flags override them.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredOptions {
    pub max_stabilization_depth: Option<u32>,
    pub ansatz_degree: Option<u32>,
    pub probe_seed: Option<u64>,
    pub probe_points: Option<u32>,
}

/// A declaration translated into the symbolic model: the owned system,
/// its fiber map, and the original declaration for echoing.
pub struct LoadedSystem {
    pub declaration: SystemDeclaration,
    pub model: SystemModel,
    pub map: LegendreMap,
}

pub fn load(path: &Path) -> Result<LoadedSystem, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    let declaration: SystemDeclaration =
        toml::from_str(&text).map_err(|e| CliError::Declaration {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
    build(declaration)
}

pub fn build(declaration: SystemDeclaration) -> Result<LoadedSystem, CliError> {
    let mut builder = SymbolTableBuilder::new();
    for c in &declaration.coordinates {
        builder = builder.coordinate(c);
    }
    for p in &declaration.parameters {
        builder = builder.parameter(p);
    }
    for g in &declaration.gauge_functions {
        builder = builder.gauge_function(g);
    }
    let table = builder.build()?;
    let lagrangian = parse_expr(&declaration.lagrangian, &table)?;
    let model = SystemModel::new(table, lagrangian)?;

    let constraints: Option<Vec<Expr>> = declaration
        .primary_constraints
        .as_ref()
        .map(|list| {
            list.iter()
                .map(|src| parse_expr(src, model.table()))
                .collect()
        })
        .transpose()?;
    let hamiltonian: Option<Expr> = declaration
        .hamiltonian
        .as_ref()
        .map(|src| parse_expr(src, model.table()))
        .transpose()?;
    let map = LegendreMap::build_with(&model, constraints.as_deref(), hamiltonian.as_ref())?;

    Ok(LoadedSystem {
        declaration,
        model,
        map,
    })
}
