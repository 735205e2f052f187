//! Aggregate evaluation and the coupling graph.
//!
//! Derived properties fold over the properties of a system's components:
//! the component systems live either in the child unit the owner explodes
//! into, or among its siblings in the same unit. Numeric folds (`sum`,
//! `min`, `max`, `avg`) read number values — from the valuation for
//! intrinsic properties, recursively for derived ones — while `count`
//! counts the components that declare the property at all, whatever its
//! type. Fold inputs are sorted by total order before reduction, so the
//! result is bit-identical under any permutation of components or
//! valuation entries.
//!
//! Evaluation is all-or-nothing: [`evaluate_aggregates`] either values every
//! derived property in the model or reports every problem it found
//! (E-EVL-001 missing input, E-EVL-002 division by zero, E-EVL-003 empty
//! fold without a neutral element, E-EVL-004 circular derivation).

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::*;
use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::span::SourceSpan;

/// Values for intrinsic number properties, keyed by fully qualified path.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Valuation {
    pub values: BTreeMap<String, f64>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    /// Parses `path = number` lines. `#` starts a comment, blank lines are
    /// skipped, keys may not repeat. Errors are plain messages because the
    /// valuation file is tool input, not model source.
    pub fn parse(text: &str) -> Result<Valuation, String> {
        let mut valuation = Valuation::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let number = index + 1;
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {number}: expected `path = number`"));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(format!("line {number}: missing property path"));
            }
            let parsed: f64 = value
                .parse()
                .map_err(|_| format!("line {number}: `{value}` is not a number"))?;
            if valuation.values.insert(key.to_string(), parsed).is_some() {
                return Err(format!("line {number}: duplicate value for `{key}`"));
            }
        }
        Ok(valuation)
    }
}

/// Evaluates every derived property in the model. Keys of the result are
/// fully qualified property paths.
pub fn evaluate_aggregates(
    model: &ResolvedModel,
    valuation: &Valuation,
) -> Result<BTreeMap<String, f64>, Vec<Diagnostic>> {
    let mut evaluator = Evaluator {
        model,
        valuation,
        memo: BTreeMap::new(),
        in_progress: BTreeSet::new(),
        diags: Vec::new(),
    };

    // Every valuation entry must name an intrinsic number property.
    let query_span = SourceSpan::point(&model.root().path, 1, 1);
    for key in valuation.values.keys() {
        let target = model.symbols.get(key).and_then(|s| {
            if s.kind != SymbolKind::Property {
                return None;
            }
            let prop = &model.units[s.unit].unit.systems[s.system].properties[s.element?];
            (prop.classification == PropertyClassification::Intrinsic
                && prop.value_type == ValueType::Number)
                .then_some(prop)
        });
        if target.is_none() {
            evaluator.diags.push(Diagnostic::new(
                codes::E_QRY_001,
                format!("valuation key `{key}` does not name an intrinsic number property"),
                query_span.clone(),
            ));
        }
    }

    let mut results = BTreeMap::new();
    for (unit_index, resolved) in model.units.iter().enumerate() {
        for (system_index, sys) in resolved.unit.systems.iter().enumerate() {
            for (property_index, prop) in sys.properties.iter().enumerate() {
                if prop.derivation.is_none() {
                    continue;
                }
                if let Ok(value) = evaluator.property_value(unit_index, system_index, property_index)
                {
                    let fq = format!("{}.{}", resolved.system_path(&sys.name), prop.name);
                    results.insert(fq, value);
                }
            }
        }
    }

    if evaluator.diags.is_empty() {
        Ok(results)
    } else {
        let mut diags = evaluator.diags;
        sort_diagnostics(&mut diags);
        Err(diags)
    }
}

struct Evaluator<'a> {
    model: &'a ResolvedModel,
    valuation: &'a Valuation,
    /// Finished properties by fully qualified path; `Err` marks a property
    /// whose failure is already reported, so dependents stay quiet.
    memo: BTreeMap<String, Result<f64, ()>>,
    in_progress: BTreeSet<String>,
    diags: Vec<Diagnostic>,
}

impl Evaluator<'_> {
    fn property_fq(&self, unit: usize, system: usize, property: usize) -> String {
        let resolved = &self.model.units[unit];
        let sys = &resolved.unit.systems[system];
        format!("{}.{}", resolved.system_path(&sys.name), sys.properties[property].name)
    }

    /// The value of one property: from the valuation when intrinsic, by
    /// evaluating its derivation otherwise.
    fn property_value(&mut self, unit: usize, system: usize, property: usize) -> Result<f64, ()> {
        let fq = self.property_fq(unit, system, property);
        if let Some(known) = self.memo.get(&fq) {
            return *known;
        }
        let prop = &self.model.units[unit].unit.systems[system].properties[property];
        if !self.in_progress.insert(fq.clone()) {
            self.diags.push(Diagnostic::new(
                codes::E_EVL_004,
                format!("circular derivation involving `{fq}`"),
                prop.span.clone(),
            ));
            self.memo.insert(fq, Err(()));
            return Err(());
        }
        let result = match &prop.derivation {
            Some(expr) => {
                let expr = expr.clone();
                self.eval_expr(unit, system, &fq, &expr)
            }
            None => {
                debug_assert!(
                    prop.classification == PropertyClassification::Intrinsic
                        && prop.value_type == ValueType::Number,
                    "only intrinsic numbers are read without a derivation"
                );
                match self.valuation.get(&fq) {
                    Some(value) => Ok(value),
                    None => {
                        self.diags.push(Diagnostic::new(
                            codes::E_EVL_001,
                            format!("no value for intrinsic property `{fq}`; supply one in the valuation"),
                            prop.span.clone(),
                        ));
                        Err(())
                    }
                }
            }
        };
        self.in_progress.remove(&fq);
        self.memo.insert(fq, result);
        result
    }

    fn eval_expr(
        &mut self,
        unit: usize,
        system: usize,
        owner_fq: &str,
        expr: &DerivationExpr,
    ) -> Result<f64, ()> {
        match expr {
            DerivationExpr::Number { value, .. } => Ok(*value),
            DerivationExpr::Binary { op, lhs, rhs, span } => {
                // Evaluate both sides so one failure does not hide the other.
                let left = self.eval_expr(unit, system, owner_fq, lhs);
                let right = self.eval_expr(unit, system, owner_fq, rhs);
                let (left, right) = (left?, right?);
                match op {
                    BinOp::Add => Ok(left + right),
                    BinOp::Sub => Ok(left - right),
                    BinOp::Mul => Ok(left * right),
                    BinOp::Div => {
                        if right == 0.0 {
                            self.diags.push(Diagnostic::new(
                                codes::E_EVL_002,
                                format!("division by zero evaluating `{owner_fq}`"),
                                span.clone(),
                            ));
                            Err(())
                        } else {
                            Ok(left / right)
                        }
                    }
                }
            }
            DerivationExpr::Fold { op, scope, property, span } => {
                self.eval_fold(unit, system, owner_fq, *op, scope, property, span)
            }
        }
    }

    /// The components a fold ranges over, by the owner's declaration order.
    fn fold_components(&self, unit: usize, system: usize, scope: &FoldScope) -> Vec<String> {
        let composition = &self.model.units[unit].unit.systems[system].composition;
        match scope {
            FoldScope::AllComponents => composition.clone(),
            FoldScope::Named(name) => {
                composition.iter().filter(|c| *c == name).cloned().collect()
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_fold(
        &mut self,
        unit: usize,
        system: usize,
        owner_fq: &str,
        op: FoldOp,
        scope: &FoldScope,
        property: &str,
        span: &SourceSpan,
    ) -> Result<f64, ()> {
        let components = self.fold_components(unit, system, scope);

        if op == FoldOp::Count {
            let mut declared = 0usize;
            for component in &components {
                if let Some((u, s)) = self.model.component_system(unit, system, component) {
                    if self.model.units[u].unit.systems[s]
                        .properties
                        .iter()
                        .any(|p| p.name == property)
                    {
                        declared += 1;
                    }
                }
            }
            return Ok(declared as f64);
        }

        let mut inputs = Vec::new();
        let mut failed = false;
        for component in &components {
            let Some((u, s)) = self.model.component_system(unit, system, component) else {
                continue; // atomic component: nothing to read
            };
            let component_sys = &self.model.units[u].unit.systems[s];
            for (p_index, p) in component_sys.properties.iter().enumerate() {
                if p.name != property || p.value_type != ValueType::Number {
                    continue;
                }
                let readable = p.derivation.is_some()
                    || p.classification == PropertyClassification::Intrinsic;
                if !readable {
                    continue; // declaration-only: no value to contribute
                }
                match self.property_value(u, s, p_index) {
                    Ok(value) => inputs.push(value),
                    Err(()) => failed = true,
                }
            }
        }
        if failed {
            return Err(());
        }

        // Total order sort makes the reduction independent of declaration
        // and valuation order, bit for bit.
        inputs.sort_by(|a, b| a.total_cmp(b));
        match op {
            FoldOp::Sum => Ok(inputs.iter().sum()),
            FoldOp::Min | FoldOp::Max | FoldOp::Avg if inputs.is_empty() => {
                self.diags.push(Diagnostic::new(
                    codes::E_EVL_003,
                    format!(
                        "{} fold over `{property}` has no inputs evaluating `{owner_fq}`",
                        op.as_str()
                    ),
                    span.clone(),
                ));
                Err(())
            }
            FoldOp::Min => Ok(inputs[0]),
            FoldOp::Max => Ok(*inputs.last().unwrap()),
            FoldOp::Avg => Ok(inputs.iter().sum::<f64>() / inputs.len() as f64),
            FoldOp::Count => unreachable!("count handled above"),
        }
    }
}

// ===== Coupling graph =====

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Component,
    Environment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub energy: Option<EnergyKind>,
    pub label: Option<String>,
}

/// A system's structure as a graph: composition nodes first, then
/// environment nodes, one edge per coupling, all in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

pub fn coupling_graph(sys: &SystemDecl) -> CouplingGraph {
    let mut nodes = Vec::new();
    for name in &sys.composition {
        nodes.push(GraphNode { name: name.clone(), kind: NodeKind::Component });
    }
    for name in &sys.environment {
        nodes.push(GraphNode { name: name.clone(), kind: NodeKind::Environment });
    }
    let index_of = |end: &CouplingEnd| {
        let kind = match end.scope {
            CouplingScope::Component => NodeKind::Component,
            CouplingScope::Environment => NodeKind::Environment,
        };
        nodes.iter().position(|n| n.kind == kind && n.name == end.party)
    };
    let edges = sys
        .couplings
        .iter()
        .filter_map(|c| {
            Some(GraphEdge {
                a: index_of(&c.end_a)?,
                b: index_of(&c.end_b)?,
                energy: c.energy,
                label: c.label.clone(),
            })
        })
        .collect();
    CouplingGraph { nodes, edges }
}
