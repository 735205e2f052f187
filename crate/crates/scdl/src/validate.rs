//! Semantic validation of a resolved model.
//!
//! [`validate`] runs every check and returns the full list of diagnostics,
//! errors and warnings together, sorted by source position:
//!
//! * E-BWW-001 — a system's components must be transitively bonded: the
//!   coupling graph over the composition has to be connected (checked with
//!   union-find by [`check_bww_system`]; [`brute_force_bipartition_check`]
//!   is the independent exhaustive route kept for cross-verification);
//! * E-KND-001 — conceptual systems cannot carry energy-annotated couplings;
//! * E-MAP-001 / W-MAP-010 / E-MAP-002 — counterpart completeness between
//!   mechanism actors and structural entities, and mapping path resolution;
//! * E-PRP-001 / E-PRP-002 / W-PRP-003 — property classification rules and
//!   fold references;
//! * W-CSM-001/002/003, W-ATOM-001 — composition/structure/mechanism
//!   completeness advice.

use std::collections::BTreeSet;

use crate::ast::*;
use crate::diag::{codes, sort_diagnostics, Diagnostic};

/// Runs every semantic check over a resolved model.
pub fn validate(model: &ResolvedModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (unit_index, resolved) in model.units.iter().enumerate() {
        for (system_index, sys) in resolved.unit.systems.iter().enumerate() {
            check_connectivity(sys, &mut diags);
            check_kind_rules(sys, &mut diags);
            check_property_rules(model, unit_index, system_index, &mut diags);
            check_cesm_completeness(sys, &mut diags);
        }
        for assoc in &resolved.unit.associations {
            check_mapping_completeness(model, unit_index, assoc, &mut diags);
            if assoc.mappings.is_empty() {
                diags.push(Diagnostic::new(
                    codes::W_CSM_003,
                    format!(
                        "association between `{}` and `{}` maps nothing",
                        assoc.system_a, assoc.system_b
                    ),
                    assoc.span.clone(),
                ));
            }
        }
    }
    sort_diagnostics(&mut diags);
    diags
}

// ===== Connectivity (the BWW system condition) =====

/// The composition indices bonded by each component-to-component coupling.
/// Couplings to the environment do not bond components together.
pub fn component_coupling_edges(sys: &SystemDecl) -> Vec<(usize, usize)> {
    let index_of = |name: &str| sys.composition.iter().position(|c| c == name);
    sys.couplings
        .iter()
        .filter_map(|c| {
            if c.end_a.scope == CouplingScope::Component && c.end_b.scope == CouplingScope::Component
            {
                Some((index_of(&c.end_a.party)?, index_of(&c.end_b.party)?))
            } else {
                None
            }
        })
        .collect()
}

/// Union-find route: checks that the coupling graph over `components` is
/// connected. Returns `None` when connected (vacuously for fewer than two
/// components), otherwise the smallest disconnected part — ties broken by
/// the lexicographically first member — sorted by name.
pub fn check_bww_system(
    components: &[String],
    edges: &[(usize, usize)],
) -> Option<Vec<String>> {
    let n = components.len();
    if n < 2 {
        return None;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut parts: std::collections::BTreeMap<usize, Vec<&str>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        parts.entry(r).or_default().push(&components[i]);
    }
    if parts.len() <= 1 {
        return None;
    }
    let mut smallest: Option<Vec<&str>> = None;
    for mut part in parts.into_values() {
        part.sort_unstable();
        let better = match &smallest {
            None => true,
            Some(best) => (part.len(), part[0]) < (best.len(), best[0]),
        };
        if better {
            smallest = Some(part);
        }
    }
    smallest.map(|part| part.into_iter().map(String::from).collect())
}

/// Exhaustive route: a system of `n` components is connected exactly when
/// every bipartition into two non-empty sides is crossed by at least one
/// coupling. Tries all `2^(n-1) - 1` bipartitions with component 0 pinned
/// to one side. Exponential on purpose; refuses n > 16.
pub fn brute_force_bipartition_check(n: usize, edges: &[(usize, usize)]) -> bool {
    assert!(n <= 16, "bipartition enumeration is limited to 16 components, got {n}");
    if n < 2 {
        return true;
    }
    // Bit i of a mask says component i+1 sits opposite component 0.
    for mask in 1u32..(1u32 << (n - 1)) {
        let side_b = |i: usize| i > 0 && mask & (1 << (i - 1)) != 0;
        let crossed = edges.iter().any(|&(a, b)| side_b(a) != side_b(b));
        if !crossed {
            return false;
        }
    }
    true
}

fn check_connectivity(sys: &SystemDecl, diags: &mut Vec<Diagnostic>) {
    let edges = component_coupling_edges(sys);
    if let Some(part) = check_bww_system(&sys.composition, &edges) {
        diags.push(Diagnostic::new(
            codes::E_BWW_001,
            format!(
                "system `{}` is not connected: {{{}}} is uncoupled from the rest of the composition",
                sys.name,
                part.join(", ")
            ),
            sys.span.clone(),
        ));
    }
}

// ===== Boundary =====

/// Splits the composition into boundary components (coupled to at least one
/// environment party) and internal components. Both halves come back sorted;
/// together they are exactly the composition.
pub fn classify_boundary(sys: &SystemDecl) -> (Vec<String>, Vec<String>) {
    let mut boundary_set = BTreeSet::new();
    for coupling in &sys.couplings {
        for (end, other) in
            [(&coupling.end_a, &coupling.end_b), (&coupling.end_b, &coupling.end_a)]
        {
            if end.scope == CouplingScope::Component && other.scope == CouplingScope::Environment
            {
                boundary_set.insert(end.party.clone());
            }
        }
    }
    let mut boundary: Vec<String> = Vec::new();
    let mut internal: Vec<String> = Vec::new();
    let mut names: Vec<&String> = sys.composition.iter().collect();
    names.sort_unstable();
    for name in names {
        if boundary_set.contains(name) {
            boundary.push(name.clone());
        } else {
            internal.push(name.clone());
        }
    }
    (boundary, internal)
}

// ===== Kind rules =====

fn check_kind_rules(sys: &SystemDecl, diags: &mut Vec<Diagnostic>) {
    if sys.kind != SystemKind::Conceptual {
        return;
    }
    for coupling in &sys.couplings {
        if let Some(energy) = coupling.energy {
            diags.push(Diagnostic::new(
                codes::E_KND_001,
                format!(
                    "conceptual system `{}` cannot exchange {} energy; energy couplings need a concrete system",
                    sys.name,
                    energy.as_str()
                ),
                coupling.span.clone(),
            ));
        }
    }
}

// ===== Mapping completeness =====

fn check_mapping_completeness(
    model: &ResolvedModel,
    unit_index: usize,
    assoc: &SystemAssociation,
    diags: &mut Vec<Diagnostic>,
) {
    let resolved = &model.units[unit_index];
    let endpoints = [assoc.system_a.as_str(), assoc.system_b.as_str()];

    // Resolve every mapping path; remember counterpart actor/entity pairs.
    let mut covered_actors: BTreeSet<String> = BTreeSet::new();
    let mut covered_entities: BTreeSet<String> = BTreeSet::new();
    for mapping in &assoc.mappings {
        let mut sides = Vec::new();
        for path in [&mapping.path_a, &mapping.path_b] {
            let in_endpoints = path
                .segments
                .first()
                .is_some_and(|first| endpoints.contains(&first.as_str()));
            let symbol = if in_endpoints {
                model.resolve_in_unit(unit_index, path)
            } else {
                None
            };
            match symbol {
                Some(s) => sides.push(Some((resolved.prefix.clone() + &path.dotted(), s))),
                None => {
                    diags.push(Diagnostic::new(
                        codes::E_MAP_002,
                        format!(
                            "mapping path `{}` does not resolve inside the association",
                            path.dotted()
                        ),
                        mapping.span.clone(),
                    ));
                    sides.push(None);
                }
            }
        }
        if mapping.kind == MappingKind::Counterpart {
            if let (Some((fq_a, sym_a)), Some((fq_b, sym_b))) = (&sides[0], &sides[1]) {
                for ((fq_x, sym_x), (_, sym_y)) in
                    [((fq_a, sym_a), (fq_b, sym_b)), ((fq_b, sym_b), (fq_a, sym_a))]
                {
                    if sym_x.kind == SymbolKind::Actor && sym_y.kind == SymbolKind::Entity {
                        covered_actors.insert(fq_x.to_string());
                    }
                    if sym_x.kind == SymbolKind::Entity && sym_y.kind == SymbolKind::Actor {
                        covered_entities.insert(fq_x.to_string());
                    }
                }
            }
        }
    }

    // When one endpoint contributes mechanism actors and the other structural
    // entities, every actor needs a counterpart entity (error) and every
    // entity wants a counterpart actor (warning).
    for (mech_name, struct_name) in
        [(assoc.system_a.as_str(), assoc.system_b.as_str()), (assoc.system_b.as_str(), assoc.system_a.as_str())]
    {
        let Some(mech_sys) = resolved.unit.system(mech_name) else { continue };
        let Some(struct_sys) = resolved.unit.system(struct_name) else { continue };
        if !mech_sys.has_fragment_kind(DimensionKind::Mechanism)
            || !struct_sys.has_fragment_kind(DimensionKind::Structural)
        {
            continue;
        }
        let mech_fq = resolved.system_path(mech_name);
        let struct_fq = resolved.system_path(struct_name);
        for fragment in &mech_sys.dimensions {
            let FragmentBody::Mechanism { actors, .. } = &fragment.body else { continue };
            for actor in actors {
                let fq = format!("{mech_fq}.{}.{}", fragment.name, actor.name);
                if !covered_actors.contains(&fq) {
                    diags.push(Diagnostic::new(
                        codes::E_MAP_001,
                        format!(
                            "actor `{}` of `{mech_name}` has no counterpart entity in `{struct_name}`",
                            actor.name
                        ),
                        assoc.span.clone(),
                    ));
                }
            }
        }
        for fragment in &struct_sys.dimensions {
            let FragmentBody::Structural { entities, .. } = &fragment.body else { continue };
            for entity in entities {
                let fq = format!("{struct_fq}.{}.{}", fragment.name, entity.name);
                if !covered_entities.contains(&fq) {
                    diags.push(Diagnostic::new(
                        codes::W_MAP_010,
                        format!(
                            "entity `{}` of `{struct_name}` has no counterpart actor in `{mech_name}`",
                            entity.name
                        ),
                        assoc.span.clone(),
                    ));
                }
            }
        }
    }
}

// ===== Property rules =====

fn check_property_rules(
    model: &ResolvedModel,
    unit_index: usize,
    system_index: usize,
    diags: &mut Vec<Diagnostic>,
) {
    let sys = &model.units[unit_index].unit.systems[system_index];
    for prop in &sys.properties {
        match prop.classification {
            PropertyClassification::Aggregate => {
                if prop.derivation.is_none() {
                    diags.push(Diagnostic::new(
                        codes::E_PRP_001,
                        format!(
                            "aggregate property `{}` needs a derivation; only intrinsic and emergent properties stand alone",
                            prop.name
                        ),
                        prop.span.clone(),
                    ));
                }
            }
            PropertyClassification::Emergent => {
                if prop.derivation.is_some() {
                    diags.push(Diagnostic::new(
                        codes::W_PRP_003,
                        format!(
                            "emergent property `{}` has a derivation; a derivable property is aggregate, not emergent",
                            prop.name
                        ),
                        prop.span.clone(),
                    ));
                }
            }
            // Intrinsic properties with derivations never parse.
            PropertyClassification::Intrinsic => {}
        }
        let Some(expr) = &prop.derivation else { continue };
        for fold in expr.folds() {
            let DerivationExpr::Fold { op, scope, property, span } = fold else {
                unreachable!("folds() returns folds only")
            };
            check_fold_reference(
                model,
                unit_index,
                system_index,
                *op,
                scope,
                property,
                span,
                diags,
            );
        }
    }
}

/// A fold must have at least one component able to supply the property it
/// names: any declaration for `count`, a number declaration for the numeric
/// folds.
#[allow(clippy::too_many_arguments)]
fn check_fold_reference(
    model: &ResolvedModel,
    unit_index: usize,
    system_index: usize,
    op: FoldOp,
    scope: &FoldScope,
    property: &str,
    span: &crate::span::SourceSpan,
    diags: &mut Vec<Diagnostic>,
) {
    let sys = &model.units[unit_index].unit.systems[system_index];
    let numeric = op != FoldOp::Count;
    let declares = |component: &str| -> bool {
        let Some((u, s)) = model.component_system(unit_index, system_index, component) else {
            return false;
        };
        model.units[u].unit.systems[s]
            .properties
            .iter()
            .any(|p| p.name == property && (!numeric || p.value_type == ValueType::Number))
    };
    match scope {
        FoldScope::Named(component) => {
            if !sys.composition.contains(component) {
                diags.push(Diagnostic::new(
                    codes::E_PRP_002,
                    format!("fold scope `{component}` is not a component of `{}`", sys.name),
                    span.clone(),
                ));
            } else if !declares(component) {
                diags.push(Diagnostic::new(
                    codes::E_PRP_002,
                    format!(
                        "component `{component}` declares no {}property `{property}`",
                        if numeric { "number " } else { "" }
                    ),
                    span.clone(),
                ));
            }
        }
        FoldScope::AllComponents => {
            if !sys.composition.iter().any(|c| declares(c)) {
                diags.push(Diagnostic::new(
                    codes::E_PRP_002,
                    format!(
                        "no component of `{}` declares a {}property `{property}`",
                        sys.name,
                        if numeric { "number " } else { "" }
                    ),
                    span.clone(),
                ));
            }
        }
    }
}

// ===== CESM completeness advice =====

fn check_cesm_completeness(sys: &SystemDecl, diags: &mut Vec<Diagnostic>) {
    if sys.composition.is_empty() {
        diags.push(Diagnostic::new(
            codes::W_ATOM_001,
            format!("system `{}` has an empty composition; it is being treated as atomic", sys.name),
            sys.span.clone(),
        ));
    }
    if sys.kind == SystemKind::Concrete {
        if sys.composition.len() >= 2 && sys.couplings.is_empty() {
            diags.push(Diagnostic::new(
                codes::W_CSM_001,
                format!("concrete system `{}` declares components but no structure", sys.name),
                sys.span.clone(),
            ));
        }
        if sys.mechanisms.is_empty() {
            diags.push(Diagnostic::new(
                codes::W_CSM_002,
                format!("concrete system `{}` names no mechanism", sys.name),
                sys.span.clone(),
            ));
        }
    }
}
