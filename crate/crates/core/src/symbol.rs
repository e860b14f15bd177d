//! Symbols and the per-system symbol table.
//!
//! A symbol is an interned, self-describing name: coordinates, their
//! velocity/acceleration/momentum companions, the time variable, external
//! parameters, gauge-function derivatives and the opaque atoms produced by
//! applying a vector field to an arbitrary function.  Symbols compare and
//! hash by name; the table guarantees one kind per name.
//!
//! Jet-space convention: all symbols are mutually independent under partial
//! differentiation.  `xdot` is not the derivative of `x`; the relation
//! between them is imposed by the total-time-derivative operator, never by
//! `Expr::diff`.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::CoreError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Time,
    Coordinate,
    Velocity,
    Acceleration,
    Momentum,
    Parameter,
    /// n-th time derivative of a declared gauge function; the chain is
    /// unbounded and advanced on demand by total time derivatives.
    GaugeDerivative,
    /// Undetermined multiplier treated as a first-class symbol (the
    /// `lambda`/`eta` family attached to evolution fields).
    FreeParameter,
    /// Result of applying a labelled vector field to a free parameter or to
    /// another opaque application; nothing is known about it beyond its name.
    OpaqueApplication,
}

#[derive(Debug)]
struct SymbolData {
    name: String,
    kind: SymbolKind,
    /// Owning coordinate or gauge base, where applicable.
    base: Option<String>,
    /// Derivative order for gauge-chain symbols.
    order: u32,
}

/// Cheap-to-clone immutable symbol.  Equality and ordering are by name.
#[derive(Clone)]
pub struct Symbol(Arc<SymbolData>);

impl Symbol {
    fn new(name: String, kind: SymbolKind, base: Option<String>, order: u32) -> Self {
        Symbol(Arc::new(SymbolData {
            name,
            kind,
            base,
            order,
        }))
    }

    pub fn time() -> Self {
        Symbol::new("t".to_owned(), SymbolKind::Time, None, 0)
    }

    pub fn coordinate(name: &str) -> Self {
        Symbol::new(name.to_owned(), SymbolKind::Coordinate, None, 0)
    }

    pub fn velocity_of(coord: &str) -> Self {
        Symbol::new(
            format!("{coord}dot"),
            SymbolKind::Velocity,
            Some(coord.to_owned()),
            1,
        )
    }

    pub fn acceleration_of(coord: &str) -> Self {
        Symbol::new(
            format!("{coord}ddot"),
            SymbolKind::Acceleration,
            Some(coord.to_owned()),
            2,
        )
    }

    pub fn momentum_of(coord: &str) -> Self {
        Symbol::new(
            format!("p_{coord}"),
            SymbolKind::Momentum,
            Some(coord.to_owned()),
            0,
        )
    }

    pub fn parameter(name: &str) -> Self {
        Symbol::new(name.to_owned(), SymbolKind::Parameter, None, 0)
    }

    pub fn free_parameter(name: &str) -> Self {
        Symbol::new(name.to_owned(), SymbolKind::FreeParameter, None, 0)
    }

    /// n-th derivative of a gauge function: `eps`, `epsdot`, `epsddot`,
    /// `eps_d3`, `eps_d4`, ...
    pub fn gauge(base: &str, order: u32) -> Self {
        let name = gauge_name(base, order);
        Symbol::new(
            name,
            SymbolKind::GaugeDerivative,
            Some(base.to_owned()),
            order,
        )
    }

    /// Opaque result of `field . target` where nothing further is known.
    pub fn opaque_application(field_label: &str, target: &Symbol) -> Self {
        Symbol::new(
            format!("{field_label}_{}", target.name()),
            SymbolKind::OpaqueApplication,
            Some(target.name().to_owned()),
            0,
        )
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.0.kind
    }

    pub fn base(&self) -> Option<&str> {
        self.0.base.as_deref()
    }

    pub fn order(&self) -> u32 {
        self.0.order
    }

    /// Next symbol in a gauge-derivative chain.
    pub fn gauge_next(&self) -> Option<Symbol> {
        if self.kind() == SymbolKind::GaugeDerivative {
            Some(Symbol::gauge(self.base()?, self.order() + 1))
        } else {
            None
        }
    }
}

pub(crate) fn gauge_name(base: &str, order: u32) -> String {
    match order {
        0 => base.to_owned(),
        1 => format!("{base}dot"),
        2 => format!("{base}ddot"),
        n => format!("{base}_d{n}"),
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.name == other.0.name
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.name.cmp(&other.0.name)
    }
}

impl core::hash::Hash for Symbol {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.0.name.hash(state);
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.name)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.name)
    }
}

const FUNCTION_NAMES: &[&str] = &["exp", "log", "sin", "cos", "sqrt"];

/// Frozen name registry for one system: coordinates in declaration order with
/// their derived companions, the time symbol, parameters and gauge bases.
/// Gauge-chain symbols of arbitrary order resolve without table mutation.
#[derive(Clone)]
pub struct SymbolTable {
    inner: Arc<TableInner>,
}

impl core::fmt::Debug for SymbolTable {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SymbolTable")
            .field("coordinates", &self.inner.coordinates)
            .field("parameters", &self.inner.parameters)
            .field("gauge_bases", &self.inner.gauge_bases)
            .finish()
    }
}

struct TableInner {
    by_name: alloc::collections::BTreeMap<String, Symbol>,
    time: Symbol,
    coordinates: Vec<Symbol>,
    velocities: Vec<Symbol>,
    accelerations: Vec<Symbol>,
    momenta: Vec<Symbol>,
    parameters: Vec<Symbol>,
    gauge_bases: Vec<String>,
}

/// Accumulates declarations, then freezes into a [`SymbolTable`].
pub struct SymbolTableBuilder {
    coordinates: Vec<String>,
    parameters: Vec<String>,
    gauge_bases: Vec<String>,
}

impl SymbolTableBuilder {
    pub fn new() -> Self {
        SymbolTableBuilder {
            coordinates: Vec::new(),
            parameters: Vec::new(),
            gauge_bases: Vec::new(),
        }
    }

    pub fn coordinate(mut self, name: &str) -> Self {
        self.coordinates.push(name.to_owned());
        self
    }

    pub fn parameter(mut self, name: &str) -> Self {
        self.parameters.push(name.to_owned());
        self
    }

    pub fn gauge_function(mut self, base: &str) -> Self {
        self.gauge_bases.push(base.to_owned());
        self
    }

    pub fn build(self) -> Result<SymbolTable, CoreError> {
        let mut by_name = alloc::collections::BTreeMap::new();
        let mut declare = |sym: Symbol| -> Result<Symbol, CoreError> {
            let name = sym.name().to_owned();
            if !is_valid_identifier(&name) {
                return Err(CoreError::InvalidName(name));
            }
            if FUNCTION_NAMES.contains(&name.as_str()) {
                return Err(CoreError::ReservedName(name));
            }
            if by_name.insert(name.clone(), sym.clone()).is_some() {
                return Err(CoreError::DuplicateName(name));
            }
            Ok(sym)
        };

        let time = declare(Symbol::time())?;
        let mut coordinates = Vec::new();
        let mut velocities = Vec::new();
        let mut accelerations = Vec::new();
        let mut momenta = Vec::new();
        for c in &self.coordinates {
            coordinates.push(declare(Symbol::coordinate(c))?);
            velocities.push(declare(Symbol::velocity_of(c))?);
            accelerations.push(declare(Symbol::acceleration_of(c))?);
            momenta.push(declare(Symbol::momentum_of(c))?);
        }
        let mut parameters = Vec::new();
        for p in &self.parameters {
            parameters.push(declare(Symbol::parameter(p))?);
        }
        let mut gauge_bases = Vec::new();
        for g in &self.gauge_bases {
            // Low orders are pre-registered for lookup convenience; higher
            // orders resolve through the naming pattern.
            declare(Symbol::gauge(g, 0))?;
            declare(Symbol::gauge(g, 1))?;
            declare(Symbol::gauge(g, 2))?;
            gauge_bases.push(g.clone());
        }
        Ok(SymbolTable {
            inner: Arc::new(TableInner {
                by_name,
                time,
                coordinates,
                velocities,
                accelerations,
                momenta,
                parameters,
                gauge_bases,
            }),
        })
    }
}

impl Default for SymbolTableBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl SymbolTable {
    pub fn builder() -> SymbolTableBuilder {
        SymbolTableBuilder::new()
    }

    /// Look a name up, resolving gauge-derivative names of any order.
    pub fn resolve(&self, name: &str) -> Option<Symbol> {
        if let Some(s) = self.inner.by_name.get(name) {
            return Some(s.clone());
        }
        for base in &self.inner.gauge_bases {
            if let Some(order) = parse_gauge_order(base, name) {
                return Some(Symbol::gauge(base, order));
            }
        }
        None
    }

    pub fn is_function_name(name: &str) -> bool {
        FUNCTION_NAMES.contains(&name)
    }

    pub fn time(&self) -> Symbol {
        self.inner.time.clone()
    }

    pub fn coordinates(&self) -> &[Symbol] {
        &self.inner.coordinates
    }

    pub fn velocities(&self) -> &[Symbol] {
        &self.inner.velocities
    }

    pub fn accelerations(&self) -> &[Symbol] {
        &self.inner.accelerations
    }

    pub fn momenta(&self) -> &[Symbol] {
        &self.inner.momenta
    }

    pub fn parameters(&self) -> &[Symbol] {
        &self.inner.parameters
    }

    pub fn gauge_bases(&self) -> &[String] {
        &self.inner.gauge_bases
    }

    pub fn dim(&self) -> usize {
        self.inner.coordinates.len()
    }

    /// Index of a coordinate, velocity, acceleration or momentum symbol in
    /// coordinate order.
    pub fn coordinate_index(&self, s: &Symbol) -> Option<usize> {
        let list: &[Symbol] = match s.kind() {
            SymbolKind::Coordinate => &self.inner.coordinates,
            SymbolKind::Velocity => &self.inner.velocities,
            SymbolKind::Acceleration => &self.inner.accelerations,
            SymbolKind::Momentum => &self.inner.momenta,
            _ => return None,
        };
        list.iter().position(|c| c == s)
    }
}

fn parse_gauge_order(base: &str, name: &str) -> Option<u32> {
    let rest = name.strip_prefix(base)?;
    match rest {
        "" => Some(0),
        "dot" => Some(1),
        "ddot" => Some(2),
        _ => {
            let digits = rest.strip_prefix("_d")?;
            let order: u32 = digits.parse().ok()?;
            if order >= 3 && gauge_name(base, order) == name {
                Some(order)
            } else {
                None
            }
        }
    }
}

pub(crate) fn is_valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
