//! Canonical JSON and DOT exports.
//!
//! Both renderings are deterministic: object keys are sorted, arrays follow
//! declaration order (units in depth-first pre-order), and nothing depends
//! on hashing or clocks — exporting the same model twice gives identical
//! bytes.
//!
//! The JSON document has three top-level keys:
//!
//! * `scdVersion` — format version, currently `"1"`;
//! * `root` — the root unit with every child unit nested inside its
//!   system's `explode` reference;
//! * `levels` — a flat index of every loaded unit (`levelId`, `path`,
//!   `parentSystem`).
//!
//! The DOT export renders one level: each of the unit's systems becomes a
//! box node (`«system» Name`, double periphery when the system explodes
//! further), and each association becomes an undirected edge labeled with
//! its mapping count.

use serde_json::{json, Value};

use crate::ast::*;

/// Renders the whole model as pretty-printed JSON, trailing newline included.
pub fn export_json(model: &ResolvedModel) -> String {
    let levels: Vec<Value> = model
        .units
        .iter()
        .map(|resolved| {
            let parent_system = resolved.parent.map(|(u, s)| {
                let parent_unit = &model.units[u];
                parent_unit.system_path(&parent_unit.unit.systems[s].name)
            });
            json!({
                "levelId": resolved.unit.level_id,
                "path": resolved.path,
                "parentSystem": parent_system,
            })
        })
        .collect();
    let document = json!({
        "scdVersion": "1",
        "root": unit_json(model, 0),
        "levels": levels,
    });
    let mut text = serde_json::to_string_pretty(&document).expect("model serializes");
    text.push('\n');
    text
}

fn unit_json(model: &ResolvedModel, unit_index: usize) -> Value {
    let resolved = &model.units[unit_index];
    let unit = &resolved.unit;
    json!({
        "name": unit.name,
        "levelId": unit.level_id,
        "sourcePath": unit.source_path,
        "systems": unit
            .systems
            .iter()
            .map(|sys| system_json(model, unit_index, sys))
            .collect::<Vec<_>>(),
        "associations": unit.associations.iter().map(association_json).collect::<Vec<_>>(),
        "span": span_json(&unit.span),
    })
}

fn system_json(model: &ResolvedModel, unit_index: usize, sys: &SystemDecl) -> Value {
    let resolved = &model.units[unit_index];
    let explode = sys.explode.as_ref().map(|explode| {
        let child = model
            .level_tree
            .get(&resolved.system_path(&sys.name))
            .map(|&child_index| unit_json(model, child_index));
        json!({
            "path": explode.path,
            "unit": child,
            "span": span_json(&explode.span),
        })
    });
    json!({
        "name": sys.name,
        "kind": sys.kind.keyword(),
        "composition": sys.composition,
        "environment": sys.environment,
        "structure": sys.couplings.iter().map(coupling_json).collect::<Vec<_>>(),
        "mechanisms": sys.mechanisms,
        "properties": sys.properties.iter().map(property_json).collect::<Vec<_>>(),
        "dimensions": sys.dimensions.iter().map(dimension_json).collect::<Vec<_>>(),
        "explode": explode,
        "span": span_json(&sys.span),
    })
}

fn span_json(span: &crate::span::SourceSpan) -> Value {
    json!({
        "file": span.file,
        "startLine": span.start_line,
        "startCol": span.start_col,
        "endLine": span.end_line,
        "endCol": span.end_col,
    })
}

fn coupling_end_json(end: &CouplingEnd) -> Value {
    json!({
        "scope": match end.scope {
            CouplingScope::Component => "component",
            CouplingScope::Environment => "environment",
        },
        "party": end.party,
    })
}

fn coupling_json(coupling: &Coupling) -> Value {
    json!({
        "a": coupling_end_json(&coupling.end_a),
        "b": coupling_end_json(&coupling.end_b),
        "energy": coupling.energy.map(|e| e.as_str()),
        "label": coupling.label,
        "span": span_json(&coupling.span),
    })
}

fn property_json(prop: &PropertyDecl) -> Value {
    json!({
        "classification": prop.classification.keyword(),
        "name": prop.name,
        "type": prop.value_type.keyword(),
        "derivation": prop.derivation.as_ref().map(expr_json),
        "span": span_json(&prop.span),
    })
}

fn expr_json(expr: &DerivationExpr) -> Value {
    match expr {
        DerivationExpr::Number { value, .. } => json!({
            "kind": "number",
            "value": value,
        }),
        DerivationExpr::Fold { op, scope, property, .. } => json!({
            "kind": "fold",
            "op": op.as_str(),
            "scope": match scope {
                FoldScope::AllComponents => "components",
                FoldScope::Named(name) => name.as_str(),
            },
            "property": property,
        }),
        DerivationExpr::Binary { op, lhs, rhs, .. } => json!({
            "kind": "binary",
            "op": op.as_str(),
            "lhs": expr_json(lhs),
            "rhs": expr_json(rhs),
        }),
    }
}

fn dimension_json(fragment: &DimensionFragment) -> Value {
    match &fragment.body {
        FragmentBody::Structural { entities, associations } => json!({
            "name": fragment.name,
            "kind": "structural",
            "entities": entities
                .iter()
                .map(|entity| json!({
                    "name": entity.name,
                    "attributes": entity
                        .attributes
                        .iter()
                        .map(|attr| json!({
                            "name": attr.name,
                            "type": attr.value_type.keyword(),
                            "span": span_json(&attr.span),
                        }))
                        .collect::<Vec<_>>(),
                    "span": span_json(&entity.span),
                }))
                .collect::<Vec<_>>(),
            "assocs": associations
                .iter()
                .map(|assoc| json!({
                    "a": assoc.entity_a,
                    "cardA": assoc.card_a.render(),
                    "b": assoc.entity_b,
                    "cardB": assoc.card_b.render(),
                    "label": assoc.label,
                    "span": span_json(&assoc.span),
                }))
                .collect::<Vec<_>>(),
            "span": span_json(&fragment.span),
        }),
        FragmentBody::Mechanism { actors, steps, flows } => json!({
            "name": fragment.name,
            "kind": "mechanism",
            "actors": actors
                .iter()
                .map(|actor| json!({
                    "name": actor.name,
                    "role": actor.role,
                    "span": span_json(&actor.span),
                }))
                .collect::<Vec<_>>(),
            "steps": steps
                .iter()
                .map(|step| json!({
                    "name": step.name,
                    "performedBy": step.performed_by,
                    "span": span_json(&step.span),
                }))
                .collect::<Vec<_>>(),
            "flows": flows
                .iter()
                .map(|flow| json!({
                    "from": flow.from_step,
                    "to": flow.to_step,
                    "span": span_json(&flow.span),
                }))
                .collect::<Vec<_>>(),
            "span": span_json(&fragment.span),
        }),
    }
}

fn association_json(assoc: &SystemAssociation) -> Value {
    json!({
        "a": assoc.system_a,
        "b": assoc.system_b,
        "mappings": assoc
            .mappings
            .iter()
            .map(|mapping| json!({
                "kind": match mapping.kind {
                    MappingKind::Association => "association",
                    MappingKind::Counterpart => "counterpart",
                },
                "a": mapping.path_a.dotted(),
                "b": mapping.path_b.dotted(),
                "cardA": mapping.card_a.as_ref().map(|c| c.render()),
                "cardB": mapping.card_b.as_ref().map(|c| c.render()),
                "span": span_json(&mapping.span),
            }))
            .collect::<Vec<_>>(),
        "span": span_json(&assoc.span),
    })
}

// ===== DOT =====

fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders one level — the unit at `unit_index` — as an undirected DOT graph.
pub fn export_dot(model: &ResolvedModel, unit_index: usize) -> String {
    let resolved = &model.units[unit_index];
    let unit = &resolved.unit;
    let mut out = String::new();
    out.push_str(&format!("graph \"{}\" {{\n", dot_escape(&unit.level_id)));
    out.push_str("  node [shape=box];\n");
    for sys in &unit.systems {
        let id = dot_escape(&resolved.system_path(&sys.name));
        let label = dot_escape(&format!("«system» {}", sys.name));
        let mut tooltip = format!("{} system", sys.kind.keyword());
        for fragment in &sys.dimensions {
            let kind = match fragment.kind() {
                DimensionKind::Structural => "structural",
                DimensionKind::Mechanism => "mechanism",
            };
            tooltip.push_str(&format!("; {kind} {}", fragment.name));
        }
        let peripheries = if sys.explode.is_some() { ", peripheries=2" } else { "" };
        out.push_str(&format!(
            "  \"{id}\" [label=\"{label}\"{peripheries}, tooltip=\"{}\"];\n",
            dot_escape(&tooltip)
        ));
    }
    for assoc in &unit.associations {
        let a = dot_escape(&resolved.system_path(&assoc.system_a));
        let b = dot_escape(&resolved.system_path(&assoc.system_b));
        let n = assoc.mappings.len();
        let label = if n == 1 { "1 mapping".to_string() } else { format!("{n} mappings") };
        out.push_str(&format!("  \"{a}\" -- \"{b}\" [label=\"{label}\"];\n"));
    }
    out.push_str("}\n");
    out
}
