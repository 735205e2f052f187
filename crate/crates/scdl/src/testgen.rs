//! Random model generators for property and conformance testing.
//!
//! Everything here is valid by construction: a generated unit always passes
//! the unit invariants, so it can round-trip through the formatter and the
//! parser. Compiled only for tests and the `test-support` feature.

use rand::Rng;

use crate::ast::*;
use crate::span::SourceSpan;

fn span() -> SourceSpan {
    SourceSpan::dummy()
}

const LABELS: &[&str] = &[
    "binds",
    "holds tight",
    "say \"hi\"",
    "back\\slash",
    "",
    "carries 2 loads",
];

fn maybe_label<R: Rng>(rng: &mut R, chance: f64) -> Option<String> {
    rng.gen_bool(chance).then(|| LABELS[rng.gen_range(0..LABELS.len())].to_string())
}

fn random_card<R: Rng>(rng: &mut R) -> Card {
    [Card::ZERO_OR_ONE, Card::EXACTLY_ONE, Card::ONE_OR_MORE, Card::ANY]
        [rng.gen_range(0..4)]
}

fn random_value_type<R: Rng>(rng: &mut R) -> ValueType {
    [ValueType::Number, ValueType::Text, ValueType::Flag][rng.gen_range(0..3)]
}

/// A random derivation expression of bounded depth. Number literals are
/// non-negative (the grammar has no unary minus) and finite.
fn random_expr<R: Rng>(rng: &mut R, depth: usize, components: &[String]) -> DerivationExpr {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        if rng.gen_bool(0.5) {
            let whole = rng.gen_range(0..1000) as f64;
            let value = if rng.gen_bool(0.3) { whole + 0.5 } else { whole };
            DerivationExpr::Number { value, span: span() }
        } else {
            let op = [FoldOp::Sum, FoldOp::Count, FoldOp::Min, FoldOp::Max, FoldOp::Avg]
                [rng.gen_range(0..5)];
            let scope = if components.is_empty() || rng.gen_bool(0.6) {
                FoldScope::AllComponents
            } else {
                FoldScope::Named(components[rng.gen_range(0..components.len())].clone())
            };
            DerivationExpr::Fold {
                op,
                scope,
                property: format!("p{}", rng.gen_range(0..4)),
                span: span(),
            }
        }
    } else {
        let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.gen_range(0..4)];
        DerivationExpr::Binary {
            op,
            lhs: Box::new(random_expr(rng, depth - 1, components)),
            rhs: Box::new(random_expr(rng, depth - 1, components)),
            span: span(),
        }
    }
}

fn random_fragment<R: Rng>(rng: &mut R, index: usize) -> DimensionFragment {
    let name = format!("Frag{index}");
    let body = if rng.gen_bool(0.5) {
        let entities: Vec<EntityDecl> = (0..rng.gen_range(0..3))
            .map(|e| EntityDecl {
                name: format!("Ent{e}"),
                attributes: (0..rng.gen_range(0..3))
                    .map(|a| AttributeDecl {
                        name: format!("attr{a}"),
                        value_type: random_value_type(rng),
                        span: span(),
                    })
                    .collect(),
                span: span(),
            })
            .collect();
        let associations = if entities.is_empty() {
            Vec::new()
        } else {
            (0..rng.gen_range(0..2))
                .map(|_| EntityAssociation {
                    entity_a: entities[rng.gen_range(0..entities.len())].name.clone(),
                    card_a: random_card(rng),
                    entity_b: entities[rng.gen_range(0..entities.len())].name.clone(),
                    card_b: random_card(rng),
                    label: maybe_label(rng, 0.3),
                    span: span(),
                })
                .collect()
        };
        FragmentBody::Structural { entities, associations }
    } else {
        let actors: Vec<ActorDecl> = (0..rng.gen_range(0..3))
            .map(|a| ActorDecl {
                name: format!("Act{a}"),
                role: maybe_label(rng, 0.4).unwrap_or_default(),
                span: span(),
            })
            .collect();
        let steps: Vec<StepDecl> = (0..rng.gen_range(0..3))
            .map(|s| StepDecl {
                name: format!("Step{s}"),
                performed_by: actors
                    .iter()
                    .filter(|_| rng.gen_bool(0.4))
                    .map(|a| a.name.clone())
                    .collect(),
                span: span(),
            })
            .collect();
        let flows = if steps.len() < 2 {
            Vec::new()
        } else {
            (0..rng.gen_range(0..2))
                .map(|_| {
                    let from = rng.gen_range(0..steps.len());
                    let mut to = rng.gen_range(0..steps.len());
                    if to == from {
                        to = (to + 1) % steps.len();
                    }
                    FlowDecl {
                        from_step: steps[from].name.clone(),
                        to_step: steps[to].name.clone(),
                        span: span(),
                    }
                })
                .collect()
        };
        FragmentBody::Mechanism { actors, steps, flows }
    };
    DimensionFragment { name, body, span: span() }
}

fn random_system<R: Rng>(rng: &mut R, index: usize) -> SystemDecl {
    let name = format!("Sys{index}");
    let kind = if rng.gen_bool(0.5) { SystemKind::Concrete } else { SystemKind::Conceptual };
    let composition: Vec<String> =
        (0..rng.gen_range(0..5)).map(|i| format!("c{i}")).collect();
    let environment: Vec<String> =
        (0..rng.gen_range(0..3)).map(|i| format!("e{i}")).collect();

    let mut couplings = Vec::new();
    for _ in 0..rng.gen_range(0..5) {
        // Ends draw from components and environment parties; never both
        // environmental, never self-coupled.
        let component_end = |rng: &mut R, comps: &[String]| {
            CouplingEnd::component(&comps[rng.gen_range(0..comps.len())])
        };
        if composition.is_empty() {
            break;
        }
        let end_a = component_end(rng, &composition);
        let end_b = if !environment.is_empty() && rng.gen_bool(0.3) {
            CouplingEnd::environment(&environment[rng.gen_range(0..environment.len())])
        } else {
            component_end(rng, &composition)
        };
        if end_a == end_b {
            continue;
        }
        let energy = rng
            .gen_bool(0.35)
            .then(|| EnergyKind::ALL[rng.gen_range(0..EnergyKind::ALL.len())]);
        couplings.push(Coupling { end_a, end_b, energy, label: maybe_label(rng, 0.25), span: span() });
    }

    let dimensions: Vec<DimensionFragment> =
        (0..rng.gen_range(0..3)).map(|i| random_fragment(rng, i)).collect();
    let mechanisms: Vec<String> = dimensions
        .iter()
        .filter(|f| f.kind() == DimensionKind::Mechanism && rng.gen_bool(0.6))
        .map(|f| f.name.clone())
        .collect();

    let mut properties = Vec::new();
    for p in 0..rng.gen_range(0..4) {
        let classification = [
            PropertyClassification::Intrinsic,
            PropertyClassification::Aggregate,
            PropertyClassification::Emergent,
        ][rng.gen_range(0..3)];
        let expr_depth = rng.gen_range(0..4);
        let derivation = match classification {
            PropertyClassification::Intrinsic => None,
            PropertyClassification::Aggregate => {
                Some(random_expr(rng, expr_depth, &composition))
            }
            PropertyClassification::Emergent => {
                if rng.gen_bool(0.3) {
                    Some(random_expr(rng, expr_depth, &composition))
                } else {
                    None
                }
            }
        };
        properties.push(PropertyDecl {
            classification,
            name: format!("prop{p}"),
            value_type: if derivation.is_some() { ValueType::Number } else { random_value_type(rng) },
            derivation,
            span: span(),
        });
    }

    let explode = rng.gen_bool(0.15).then(|| ExplodeRef {
        path: format!("sub/unit{}.scd", rng.gen_range(0..10)),
        span: span(),
    });

    SystemDecl {
        name,
        kind,
        composition,
        environment,
        couplings,
        mechanisms,
        properties,
        dimensions,
        explode,
        span: span(),
    }
}

/// A random single unit that always satisfies the unit invariants.
pub fn random_unit<R: Rng>(rng: &mut R) -> ModelUnit {
    let name = format!("model{}", rng.gen_range(0..100));
    let systems: Vec<SystemDecl> =
        (0..rng.gen_range(0..4)).map(|i| random_system(rng, i)).collect();

    let mut associations = Vec::new();
    if systems.len() >= 2 {
        for _ in 0..rng.gen_range(0..3) {
            let a = rng.gen_range(0..systems.len());
            let mut b = rng.gen_range(0..systems.len());
            if b == a {
                b = (b + 1) % systems.len();
            }
            let mappings = (0..rng.gen_range(0..3))
                .map(|m| {
                    let with_cards = rng.gen_bool(0.5);
                    MappingPair {
                        kind: if rng.gen_bool(0.3) {
                            MappingKind::Counterpart
                        } else {
                            MappingKind::Association
                        },
                        path_a: ElementPath::new(vec![
                            systems[a].name.clone(),
                            format!("Frag{}", m % 2),
                            format!("Ent{m}"),
                        ]),
                        path_b: ElementPath::new(vec![
                            systems[b].name.clone(),
                            format!("Frag{}", m % 2),
                            format!("Act{m}"),
                        ]),
                        card_a: with_cards.then(|| random_card(rng)),
                        card_b: with_cards.then(|| random_card(rng)),
                        span: span(),
                    }
                })
                .collect();
            associations.push(SystemAssociation {
                system_a: systems[a].name.clone(),
                system_b: systems[b].name.clone(),
                mappings,
                span: span(),
            });
        }
    }

    ModelUnit {
        name: name.clone(),
        level_id: name,
        systems,
        associations,
        source_path: String::new(),
        span: span(),
    }
}

/// A random connectivity instance: component names plus coupling edges,
/// 2 to 12 components. One third are built connected (random spanning tree
/// plus noise), one third disconnected (two isolated halves), one third
/// left to chance.
pub fn random_connectivity_instance<R: Rng>(rng: &mut R) -> (Vec<String>, Vec<(usize, usize)>) {
    let n = rng.gen_range(2..=12);
    let components: Vec<String> = (0..n).map(|i| format!("k{i}")).collect();
    let mut edges = Vec::new();
    match rng.gen_range(0..3) {
        0 => {
            // Connected: every component links to an earlier one.
            for i in 1..n {
                edges.push((rng.gen_range(0..i), i));
            }
            for _ in 0..rng.gen_range(0..n) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b {
                    edges.push((a, b));
                }
            }
        }
        1 => {
            // Disconnected: no edge crosses the cut before `split`.
            let split = rng.gen_range(1..n);
            for _ in 0..rng.gen_range(0..2 * n) {
                let (lo, hi) = if rng.gen_bool(0.5) { (0, split) } else { (split, n) };
                if hi - lo < 2 {
                    continue;
                }
                let a = rng.gen_range(lo..hi);
                let b = rng.gen_range(lo..hi);
                if a != b {
                    edges.push((a, b));
                }
            }
        }
        _ => {
            for _ in 0..rng.gen_range(0..2 * n) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b {
                    edges.push((a, b));
                }
            }
        }
    }
    (components, edges)
}

/// A random system with environment parties and a mix of internal and
/// boundary couplings, for exercising the boundary classification.
pub fn random_boundary_system<R: Rng>(rng: &mut R) -> SystemDecl {
    let n = rng.gen_range(0..7);
    let composition: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let environment: Vec<String> =
        (0..rng.gen_range(1..4)).map(|i| format!("e{i}")).collect();
    let mut couplings = Vec::new();
    if n > 0 {
        for _ in 0..rng.gen_range(0..10) {
            let a = CouplingEnd::component(&composition[rng.gen_range(0..n)]);
            let b = if rng.gen_bool(0.5) {
                CouplingEnd::environment(&environment[rng.gen_range(0..environment.len())])
            } else {
                CouplingEnd::component(&composition[rng.gen_range(0..n)])
            };
            if a == b {
                continue;
            }
            couplings.push(Coupling { end_a: a, end_b: b, energy: None, label: None, span: span() });
        }
    }
    SystemDecl {
        name: "S".to_string(),
        kind: SystemKind::Concrete,
        composition,
        environment,
        couplings,
        mechanisms: Vec::new(),
        properties: Vec::new(),
        dimensions: Vec::new(),
        explode: None,
        span: span(),
    }
}
