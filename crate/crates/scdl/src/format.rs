//! Canonical pretty-printer.
//!
//! [`format`] renders a unit in the one blessed layout: two-space indents,
//! LF line endings, one declaration per line, sections in a fixed order
//! (composition, environment, structure, mechanism, properties, dimensions,
//! explode), empty sections omitted, empty braced bodies as `{ }`, and `*`
//! cardinalities normalized to `0..*`. Formatting is idempotent and
//! reparsing the output reproduces the input structure exactly; derivation
//! expressions keep only the parentheses the tree shape requires.

use crate::ast::*;

/// Renders the canonical text of a unit. Always ends with a newline.
pub fn format(unit: &ModelUnit) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.unit(unit);
    p.out
}

/// True when `source` is already in canonical form for its parsed structure.
pub fn is_canonical(source: &str, unit: &ModelUnit) -> bool {
    source == format(unit)
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        if !text.is_empty() {
            for _ in 0..self.indent {
                self.out.push_str("  ");
            }
            self.out.push_str(text);
        }
        self.out.push('\n');
    }

    /// Emits `head { ... }`, collapsing an empty body to one line.
    fn block(&mut self, head: &str, is_empty: bool, body: impl FnOnce(&mut Self)) {
        if is_empty {
            self.line(&format!("{head} {{ }}"));
            return;
        }
        self.line(&format!("{head} {{"));
        self.indent += 1;
        body(self);
        self.indent -= 1;
        self.line("}");
    }

    fn unit(&mut self, unit: &ModelUnit) {
        let head = format!("scd {}", unit.name);
        let is_empty = unit.systems.is_empty() && unit.associations.is_empty();
        self.block(&head, is_empty, |p| {
            let mut first = true;
            for system in &unit.systems {
                if !first {
                    p.line("");
                }
                first = false;
                p.system(system);
            }
            for assoc in &unit.associations {
                if !first {
                    p.line("");
                }
                first = false;
                p.association(assoc);
            }
        });
    }

    fn system(&mut self, sys: &SystemDecl) {
        let head = format!("{} system {}", sys.kind.keyword(), sys.name);
        let is_empty = sys.composition.is_empty()
            && sys.environment.is_empty()
            && sys.couplings.is_empty()
            && sys.mechanisms.is_empty()
            && sys.properties.is_empty()
            && sys.dimensions.is_empty()
            && sys.explode.is_none();
        self.block(&head, is_empty, |p| {
            p.name_list("composition", &sys.composition);
            p.name_list("environment", &sys.environment);
            if !sys.couplings.is_empty() {
                p.block("structure", false, |p| {
                    for c in &sys.couplings {
                        p.coupling(c);
                    }
                });
            }
            for mech in &sys.mechanisms {
                p.line(&format!("mechanism {mech};"));
            }
            if !sys.properties.is_empty() {
                p.block("properties", false, |p| {
                    for prop in &sys.properties {
                        p.property(prop);
                    }
                });
            }
            for dim in &sys.dimensions {
                p.dimension(dim);
            }
            if let Some(explode) = &sys.explode {
                p.line(&format!("explode {};", quote(&explode.path)));
            }
        });
    }

    fn name_list(&mut self, section: &str, names: &[String]) {
        if names.is_empty() {
            return;
        }
        self.block(section, false, |p| {
            for name in names {
                p.line(&format!("{name};"));
            }
        });
    }

    fn coupling(&mut self, c: &Coupling) {
        let mut text = format!("{} -- {}", end_text(&c.end_a), end_text(&c.end_b));
        if let Some(energy) = c.energy {
            text.push_str(&format!(" [{}]", energy.as_str()));
        }
        if let Some(label) = &c.label {
            text.push_str(&format!(" {}", quote(label)));
        }
        text.push(';');
        self.line(&text);
    }

    fn property(&mut self, prop: &PropertyDecl) {
        let mut text = format!(
            "{} {}: {}",
            prop.classification.keyword(),
            prop.name,
            prop.value_type.keyword()
        );
        if let Some(expr) = &prop.derivation {
            text.push_str(&format!(" = {}", expr_text(expr)));
        }
        text.push(';');
        self.line(&text);
    }

    fn dimension(&mut self, dim: &DimensionFragment) {
        let kind = match dim.kind() {
            DimensionKind::Structural => "structural",
            DimensionKind::Mechanism => "mechanism",
        };
        let head = format!("dimension {kind} {}", dim.name);
        match &dim.body {
            FragmentBody::Structural { entities, associations } => {
                let is_empty = entities.is_empty() && associations.is_empty();
                self.block(&head, is_empty, |p| {
                    for entity in entities {
                        p.block(
                            &format!("entity {}", entity.name),
                            entity.attributes.is_empty(),
                            |p| {
                                for attr in &entity.attributes {
                                    p.line(&format!(
                                        "{}: {};",
                                        attr.name,
                                        attr.value_type.keyword()
                                    ));
                                }
                            },
                        );
                    }
                    for assoc in associations {
                        let mut text = format!(
                            "assoc {} [{}] -- {} [{}]",
                            assoc.entity_a,
                            assoc.card_a.render(),
                            assoc.entity_b,
                            assoc.card_b.render()
                        );
                        if let Some(label) = &assoc.label {
                            text.push_str(&format!(" {}", quote(label)));
                        }
                        text.push(';');
                        p.line(&text);
                    }
                });
            }
            FragmentBody::Mechanism { actors, steps, flows } => {
                let is_empty = actors.is_empty() && steps.is_empty() && flows.is_empty();
                self.block(&head, is_empty, |p| {
                    for actor in actors {
                        if actor.role.is_empty() {
                            p.line(&format!("actor {};", actor.name));
                        } else {
                            p.line(&format!("actor {} {};", actor.name, quote(&actor.role)));
                        }
                    }
                    for step in steps {
                        if step.performed_by.is_empty() {
                            p.line(&format!("step {};", step.name));
                        } else {
                            p.line(&format!(
                                "step {} by {};",
                                step.name,
                                step.performed_by.join(", ")
                            ));
                        }
                    }
                    for flow in flows {
                        p.line(&format!("flow {} -> {};", flow.from_step, flow.to_step));
                    }
                });
            }
        }
    }

    fn association(&mut self, assoc: &SystemAssociation) {
        let head = format!("association <<system>> {} -- {}", assoc.system_a, assoc.system_b);
        self.block(&head, assoc.mappings.is_empty(), |p| {
            for mapping in &assoc.mappings {
                let mut text = String::new();
                if mapping.kind == MappingKind::Counterpart {
                    text.push_str("counterpart ");
                }
                text.push_str(&format!(
                    "{} <-> {}",
                    mapping.path_a.dotted(),
                    mapping.path_b.dotted()
                ));
                if let (Some(a), Some(b)) = (&mapping.card_a, &mapping.card_b) {
                    text.push_str(&format!(" [{}, {}]", a.render(), b.render()));
                }
                text.push(';');
                p.line(&text);
            }
        });
    }
}

fn end_text(end: &CouplingEnd) -> String {
    match end.scope {
        CouplingScope::Component => end.party.clone(),
        CouplingScope::Environment => format!("env.{}", end.party),
    }
}

fn quote(text: &str) -> String {
    crate::lexer::encode_string(text)
}

/// Renders a derivation expression with only the parentheses the tree needs.
fn expr_text(expr: &DerivationExpr) -> String {
    render_expr(expr, 0, false)
}

fn precedence(op: BinOp) -> u8 {
    match op {
        BinOp::Add | BinOp::Sub => 1,
        BinOp::Mul | BinOp::Div => 2,
    }
}

fn render_expr(expr: &DerivationExpr, parent: u8, is_right_operand: bool) -> String {
    match expr {
        DerivationExpr::Number { value, .. } => value.to_string(),
        DerivationExpr::Fold { op, scope, property, .. } => {
            let scope_text = match scope {
                FoldScope::AllComponents => "components",
                FoldScope::Named(name) => name.as_str(),
            };
            format!("{}({}.{})", op.as_str(), scope_text, property)
        }
        DerivationExpr::Binary { op, lhs, rhs, .. } => {
            let prec = precedence(*op);
            let text = format!(
                "{} {} {}",
                render_expr(lhs, prec, false),
                op.as_str(),
                render_expr(rhs, prec, true)
            );
            // Same-precedence right operands keep their parentheses so the
            // printed text reparses to this exact tree (operators are
            // left-associative and floats are not associative).
            if prec < parent || (prec == parent && is_right_operand) {
                format!("({text})")
            } else {
                text
            }
        }
    }
}
