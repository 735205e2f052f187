//! The SCDL object model.
//!
//! A source file declares one [`ModelUnit`]: a named level holding system
//! declarations and the `<<system>>` associations between them. Systems carry
//! the four systemist sections (composition, environment, structure,
//! mechanism), property declarations, dimension fragments and an optional
//! `explode` reference to the file describing the next level down.
//!
//! All values are plain immutable data; nothing here performs IO. Two unit
//! trees are compared structurally with [`structural_eq`], which ignores
//! source spans. Construction through [`crate::parser::parse`] guarantees the
//! unit-level invariants enforced by [`check_unit`]; code that builds units by
//! hand can call it directly.

use crate::diag::{codes, Diagnostic};
use crate::span::SourceSpan;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

// ===== Systems =====

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Made of things that can change state and exchange energy.
    Concrete,
    /// Made of conceptual components; carries no energy.
    Conceptual,
}

impl SystemKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SystemKind::Concrete => "concrete",
            SystemKind::Conceptual => "conceptual",
        }
    }
}

/// The seven energy flavors a coupling may be typed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EnergyKind {
    Mechanical,
    Thermal,
    Kinetic,
    Potential,
    Electric,
    Magnetic,
    Chemical,
}

impl EnergyKind {
    pub const ALL: [EnergyKind; 7] = [
        EnergyKind::Mechanical,
        EnergyKind::Thermal,
        EnergyKind::Kinetic,
        EnergyKind::Potential,
        EnergyKind::Electric,
        EnergyKind::Magnetic,
        EnergyKind::Chemical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnergyKind::Mechanical => "mechanical",
            EnergyKind::Thermal => "thermal",
            EnergyKind::Kinetic => "kinetic",
            EnergyKind::Potential => "potential",
            EnergyKind::Electric => "electric",
            EnergyKind::Magnetic => "magnetic",
            EnergyKind::Chemical => "chemical",
        }
    }

    pub fn from_name(name: &str) -> Option<EnergyKind> {
        EnergyKind::ALL.iter().copied().find(|k| k.as_str() == name)
    }
}

/// Whether a coupling end names a component or an environment party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingScope {
    Component,
    Environment,
}

/// One end of a coupling: a party name plus the namespace it lives in.
/// Environment ends are written `env.Name` in source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingEnd {
    pub party: String,
    pub scope: CouplingScope,
}

impl CouplingEnd {
    pub fn component(name: &str) -> Self {
        CouplingEnd { party: name.to_string(), scope: CouplingScope::Component }
    }

    pub fn environment(name: &str) -> Self {
        CouplingEnd { party: name.to_string(), scope: CouplingScope::Environment }
    }
}

/// An undirected bonding link between two parties of one system.
/// At most one end may live in the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub end_a: CouplingEnd,
    pub end_b: CouplingEnd,
    pub energy: Option<EnergyKind>,
    pub label: Option<String>,
    pub span: SourceSpan,
}

// ===== Properties =====

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyClassification {
    /// Possessed by the thing itself; leaf values come from a valuation.
    Intrinsic,
    /// Resultant: derived from component properties, so a derivation is
    /// mandatory (checked by the validator as E-PRP-001).
    Aggregate,
    /// Possessed by the whole but not its parts. A derivation is optional;
    /// without one the property is declaration-only.
    Emergent,
}

impl PropertyClassification {
    pub fn keyword(self) -> &'static str {
        match self {
            PropertyClassification::Intrinsic => "intrinsic",
            PropertyClassification::Aggregate => "aggregate",
            PropertyClassification::Emergent => "emergent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Number,
    Text,
    Flag,
}

impl ValueType {
    pub fn keyword(self) -> &'static str {
        match self {
            ValueType::Number => "number",
            ValueType::Text => "text",
            ValueType::Flag => "flag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldOp {
    Sum,
    Count,
    Min,
    Max,
    Avg,
}

impl FoldOp {
    pub fn as_str(self) -> &'static str {
        match self {
            FoldOp::Sum => "sum",
            FoldOp::Count => "count",
            FoldOp::Min => "min",
            FoldOp::Max => "max",
            FoldOp::Avg => "avg",
        }
    }

    pub fn from_name(name: &str) -> Option<FoldOp> {
        [FoldOp::Sum, FoldOp::Count, FoldOp::Min, FoldOp::Max, FoldOp::Avg]
            .into_iter()
            .find(|op| op.as_str() == name)
    }
}

/// What a fold ranges over: every component declaring the property
/// (`components.prop`) or one named component (`Name.prop`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoldScope {
    AllComponents,
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// A derivation expression: folds over component properties combined with
/// arithmetic and numeric literals. Tree depth is capped at
/// [`MAX_DERIVATION_DEPTH`].
#[derive(Debug, Clone, PartialEq)]
pub enum DerivationExpr {
    Number {
        value: f64,
        span: SourceSpan,
    },
    Fold {
        op: FoldOp,
        scope: FoldScope,
        property: String,
        span: SourceSpan,
    },
    Binary {
        op: BinOp,
        lhs: Box<DerivationExpr>,
        rhs: Box<DerivationExpr>,
        span: SourceSpan,
    },
}

pub const MAX_DERIVATION_DEPTH: usize = 8;

impl DerivationExpr {
    pub fn span(&self) -> &SourceSpan {
        match self {
            DerivationExpr::Number { span, .. } => span,
            DerivationExpr::Fold { span, .. } => span,
            DerivationExpr::Binary { span, .. } => span,
        }
    }

    /// Height of the expression tree; leaves count as 1.
    pub fn depth(&self) -> usize {
        match self {
            DerivationExpr::Number { .. } | DerivationExpr::Fold { .. } => 1,
            DerivationExpr::Binary { lhs, rhs, .. } => 1 + lhs.depth().max(rhs.depth()),
        }
    }

    /// True when the whole derivation is one fold and nothing else.
    pub fn is_bare_fold(&self) -> bool {
        matches!(self, DerivationExpr::Fold { .. })
    }

    /// Every fold node in the tree, left to right.
    pub fn folds(&self) -> Vec<&DerivationExpr> {
        let mut out = Vec::new();
        self.collect_folds(&mut out);
        out
    }

    fn collect_folds<'a>(&'a self, out: &mut Vec<&'a DerivationExpr>) {
        match self {
            DerivationExpr::Number { .. } => {}
            DerivationExpr::Fold { .. } => out.push(self),
            DerivationExpr::Binary { lhs, rhs, .. } => {
                lhs.collect_folds(out);
                rhs.collect_folds(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyDecl {
    pub classification: PropertyClassification,
    pub name: String,
    pub value_type: ValueType,
    pub derivation: Option<DerivationExpr>,
    pub span: SourceSpan,
}

// ===== Dimension fragments =====

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionKind {
    Structural,
    Mechanism,
}

impl DimensionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            DimensionKind::Structural => "structural",
            DimensionKind::Mechanism => "mechanism",
        }
    }
}

/// Cardinality of an association end. `min` is 0 or 1; `max` is 1 or many.
/// `*` in source is an alias for `0..*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Card {
    pub min: u8,
    pub max: CardMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardMax {
    One,
    Many,
}

impl Card {
    pub const ZERO_OR_ONE: Card = Card { min: 0, max: CardMax::One };
    pub const EXACTLY_ONE: Card = Card { min: 1, max: CardMax::One };
    pub const ONE_OR_MORE: Card = Card { min: 1, max: CardMax::Many };
    pub const ANY: Card = Card { min: 0, max: CardMax::Many };

    /// Canonical source form: `0..1`, `1`, `1..*` or `0..*`.
    pub fn render(self) -> &'static str {
        match (self.min, self.max) {
            (0, CardMax::One) => "0..1",
            (1, CardMax::One) => "1",
            (1, CardMax::Many) => "1..*",
            _ => "0..*",
        }
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.render())
    }
}

/// A class-like element of a structural fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityDecl {
    pub name: String,
    pub attributes: Vec<AttributeDecl>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDecl {
    pub name: String,
    pub value_type: ValueType,
    pub span: SourceSpan,
}

/// An association between two entities of the same structural fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityAssociation {
    pub entity_a: String,
    pub card_a: Card,
    pub entity_b: String,
    pub card_b: Card,
    pub label: Option<String>,
    pub span: SourceSpan,
}

/// A participant of a mechanism fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorDecl {
    pub name: String,
    pub role: String,
    pub span: SourceSpan,
}

/// One step of a mechanism, optionally performed by named actors.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDecl {
    pub name: String,
    pub performed_by: Vec<String>,
    pub span: SourceSpan,
}

/// An ordering edge between two distinct steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDecl {
    pub from_step: String,
    pub to_step: String,
    pub span: SourceSpan,
}

/// The content of a dimension fragment. Structural and mechanism content are
/// mutually exclusive by construction.
#[derive(Debug, Clone, PartialEq)]
pub enum FragmentBody {
    Structural {
        entities: Vec<EntityDecl>,
        associations: Vec<EntityAssociation>,
    },
    Mechanism {
        actors: Vec<ActorDecl>,
        steps: Vec<StepDecl>,
        flows: Vec<FlowDecl>,
    },
}

/// A named view of one system along a modeling dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionFragment {
    pub name: String,
    pub body: FragmentBody,
    pub span: SourceSpan,
}

impl DimensionFragment {
    pub fn kind(&self) -> DimensionKind {
        match self.body {
            FragmentBody::Structural { .. } => DimensionKind::Structural,
            FragmentBody::Mechanism { .. } => DimensionKind::Mechanism,
        }
    }

    /// Looks up a fragment element (entity, actor or step) by name.
    pub fn element(&self, name: &str) -> Option<FragmentElement<'_>> {
        match &self.body {
            FragmentBody::Structural { entities, .. } => entities
                .iter()
                .find(|e| e.name == name)
                .map(FragmentElement::Entity),
            FragmentBody::Mechanism { actors, steps, .. } => actors
                .iter()
                .find(|a| a.name == name)
                .map(FragmentElement::Actor)
                .or_else(|| steps.iter().find(|s| s.name == name).map(FragmentElement::Step)),
        }
    }
}

/// A reference to one element inside a fragment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FragmentElement<'a> {
    Entity(&'a EntityDecl),
    Actor(&'a ActorDecl),
    Step(&'a StepDecl),
}

// ===== Mappings and associations =====

/// A dotted path `system.fragment.element` naming one fragment element.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ElementPath {
    pub segments: Vec<String>,
}

impl ElementPath {
    pub fn new(segments: Vec<String>) -> Self {
        ElementPath { segments }
    }

    pub fn from_dotted(text: &str) -> Self {
        if text.is_empty() {
            return ElementPath { segments: Vec::new() };
        }
        ElementPath { segments: text.split('.').map(|s| s.to_string()).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn dotted(&self) -> String {
        self.segments.join(".")
    }
}

impl fmt::Display for ElementPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dotted())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingKind {
    /// A bridged class association between elements of the two sides.
    Association,
    /// The mechanism-side element is the same thing as the structural-side
    /// element, seen along another dimension.
    Counterpart,
}

/// One `pathA <-> pathB` pair inside a system association.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingPair {
    pub kind: MappingKind,
    pub path_a: ElementPath,
    pub path_b: ElementPath,
    pub card_a: Option<Card>,
    pub card_b: Option<Card>,
    pub span: SourceSpan,
}

/// A `<<system>>` stereotyped association between two sibling systems.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemAssociation {
    pub system_a: String,
    pub system_b: String,
    pub mappings: Vec<MappingPair>,
    pub span: SourceSpan,
}

// ===== Systems and units =====

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDecl {
    pub name: String,
    pub kind: SystemKind,
    pub composition: Vec<String>,
    pub environment: Vec<String>,
    pub couplings: Vec<Coupling>,
    /// Names of mechanism-kind fragments this system runs on.
    pub mechanisms: Vec<String>,
    pub properties: Vec<PropertyDecl>,
    pub dimensions: Vec<DimensionFragment>,
    /// Relative path (forward slashes) of the unit describing the next level.
    pub explode: Option<ExplodeRef>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplodeRef {
    pub path: String,
    pub span: SourceSpan,
}

impl SystemDecl {
    pub fn fragment(&self, name: &str) -> Option<&DimensionFragment> {
        self.dimensions.iter().find(|f| f.name == name)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyDecl> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn has_fragment_kind(&self, kind: DimensionKind) -> bool {
        self.dimensions.iter().any(|f| f.kind() == kind)
    }
}

/// One parsed source file: a named level of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelUnit {
    pub name: String,
    /// Identifier of the level this unit describes. The grammar supplies one
    /// identifier per unit, which serves as both name and level id.
    pub level_id: String,
    pub systems: Vec<SystemDecl>,
    pub associations: Vec<SystemAssociation>,
    pub source_path: String,
    pub span: SourceSpan,
}

impl ModelUnit {
    pub fn system(&self, name: &str) -> Option<&SystemDecl> {
        self.systems.iter().find(|s| s.name == name)
    }
}

// ===== Unit-level invariants =====

/// Checks every invariant a well-formed unit must satisfy regardless of any
/// deeper semantic validation: name uniqueness, local reference resolution and
/// shape rules. [`crate::parser::parse`] runs this before returning, so a unit
/// obtained from source always passes. Conditions that have dedicated
/// validator codes (aggregate derivations, mapping path resolution) are not
/// checked here; see `crate::validate`.
pub fn check_unit(unit: &ModelUnit) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut system_names = BTreeSet::new();
    for sys in &unit.systems {
        if !system_names.insert(sys.name.clone()) {
            diags.push(Diagnostic::new(
                codes::E_PAR_002,
                format!("duplicate system name `{}`", sys.name),
                sys.span.clone(),
            ));
        }
        check_system(sys, &mut diags);
    }
    for assoc in &unit.associations {
        if assoc.system_a == assoc.system_b {
            diags.push(Diagnostic::new(
                codes::E_PAR_008,
                format!("association joins `{}` to itself", assoc.system_a),
                assoc.span.clone(),
            ));
        }
        for end in [&assoc.system_a, &assoc.system_b] {
            if unit.system(end).is_none() {
                diags.push(Diagnostic::new(
                    codes::E_PAR_004,
                    format!("association endpoint `{end}` is not a system declared in this unit"),
                    assoc.span.clone(),
                ));
            }
        }
        for mapping in &assoc.mappings {
            for path in [&mapping.path_a, &mapping.path_b] {
                if path.segments.len() != 3 {
                    diags.push(Diagnostic::new(
                        codes::E_PAR_008,
                        format!(
                            "mapping path `{path}` must have exactly three segments (system.fragment.element)"
                        ),
                        mapping.span.clone(),
                    ));
                }
            }
        }
    }
    crate::diag::sort_diagnostics(&mut diags);
    diags
}

fn check_system(sys: &SystemDecl, diags: &mut Vec<Diagnostic>) {
    let mut composition = BTreeSet::new();
    for name in &sys.composition {
        if !composition.insert(name.clone()) {
            diags.push(Diagnostic::new(
                codes::E_PAR_005,
                format!("duplicate component `{name}` in composition of `{}`", sys.name),
                sys.span.clone(),
            ));
        }
    }
    let mut environment = BTreeSet::new();
    for name in &sys.environment {
        if !environment.insert(name.clone()) {
            diags.push(Diagnostic::new(
                codes::E_PAR_005,
                format!("duplicate party `{name}` in environment of `{}`", sys.name),
                sys.span.clone(),
            ));
        }
        if composition.contains(name) {
            diags.push(Diagnostic::new(
                codes::E_PAR_008,
                format!("`{name}` appears in both composition and environment of `{}`", sys.name),
                sys.span.clone(),
            ));
        }
    }

    for coupling in &sys.couplings {
        if coupling.end_a == coupling.end_b {
            diags.push(Diagnostic::new(
                codes::E_PAR_008,
                "coupling joins a party to itself".to_string(),
                coupling.span.clone(),
            ));
        }
        if coupling.end_a.scope == CouplingScope::Environment
            && coupling.end_b.scope == CouplingScope::Environment
        {
            diags.push(Diagnostic::new(
                codes::E_PAR_008,
                "coupling may not join two environment parties".to_string(),
                coupling.span.clone(),
            ));
        }
        for end in [&coupling.end_a, &coupling.end_b] {
            let (set, kind) = match end.scope {
                CouplingScope::Component => (&composition, "composition"),
                CouplingScope::Environment => (&environment, "environment"),
            };
            if !set.contains(&end.party) {
                diags.push(Diagnostic::new(
                    codes::E_PAR_006,
                    format!("coupling end `{}` is not declared in the {kind} of `{}`", end.party, sys.name),
                    coupling.span.clone(),
                ));
            }
        }
    }

    let mut fragment_names = BTreeSet::new();
    for fragment in &sys.dimensions {
        if !fragment_names.insert(fragment.name.clone()) {
            diags.push(Diagnostic::new(
                codes::E_PAR_005,
                format!("duplicate dimension fragment `{}` on `{}`", fragment.name, sys.name),
                fragment.span.clone(),
            ));
        }
        check_fragment(fragment, diags);
    }

    for mech in &sys.mechanisms {
        match sys.fragment(mech) {
            Some(f) if f.kind() == DimensionKind::Mechanism => {}
            Some(_) => diags.push(Diagnostic::new(
                codes::E_PAR_006,
                format!("`{mech}` names a structural fragment, not a mechanism, on `{}`", sys.name),
                sys.span.clone(),
            )),
            None => diags.push(Diagnostic::new(
                codes::E_PAR_006,
                format!("mechanism `{mech}` of `{}` names no dimension fragment", sys.name),
                sys.span.clone(),
            )),
        }
    }

    let mut property_names = BTreeSet::new();
    for prop in &sys.properties {
        if !property_names.insert(prop.name.clone()) {
            diags.push(Diagnostic::new(
                codes::E_PAR_005,
                format!("duplicate property `{}` on `{}`", prop.name, sys.name),
                prop.span.clone(),
            ));
        }
        if prop.classification == PropertyClassification::Intrinsic && prop.derivation.is_some() {
            diags.push(Diagnostic::new(
                codes::E_PAR_008,
                format!("intrinsic property `{}` cannot carry a derivation", prop.name),
                prop.span.clone(),
            ));
        }
        if let Some(expr) = &prop.derivation {
            if expr.depth() > MAX_DERIVATION_DEPTH {
                diags.push(Diagnostic::new(
                    codes::E_PAR_008,
                    format!(
                        "derivation of `{}` is nested {} deep; the limit is {}",
                        prop.name,
                        expr.depth(),
                        MAX_DERIVATION_DEPTH
                    ),
                    expr.span().clone(),
                ));
            }
        }
    }
}

fn check_fragment(fragment: &DimensionFragment, diags: &mut Vec<Diagnostic>) {
    match &fragment.body {
        FragmentBody::Structural { entities, associations } => {
            let mut entity_names = BTreeSet::new();
            for entity in entities {
                if !entity_names.insert(entity.name.clone()) {
                    diags.push(Diagnostic::new(
                        codes::E_PAR_005,
                        format!("duplicate entity `{}` in fragment `{}`", entity.name, fragment.name),
                        entity.span.clone(),
                    ));
                }
                let mut attr_names = BTreeSet::new();
                for attr in &entity.attributes {
                    if !attr_names.insert(attr.name.clone()) {
                        diags.push(Diagnostic::new(
                            codes::E_PAR_005,
                            format!("duplicate attribute `{}` on entity `{}`", attr.name, entity.name),
                            attr.span.clone(),
                        ));
                    }
                }
            }
            for assoc in associations {
                for end in [&assoc.entity_a, &assoc.entity_b] {
                    if !entity_names.contains(end) {
                        diags.push(Diagnostic::new(
                            codes::E_PAR_006,
                            format!(
                                "association end `{end}` is not an entity of fragment `{}`",
                                fragment.name
                            ),
                            assoc.span.clone(),
                        ));
                    }
                }
            }
        }
        FragmentBody::Mechanism { actors, steps, flows } => {
            let mut element_names = BTreeSet::new();
            for actor in actors {
                if !element_names.insert(actor.name.clone()) {
                    diags.push(Diagnostic::new(
                        codes::E_PAR_005,
                        format!("duplicate element `{}` in fragment `{}`", actor.name, fragment.name),
                        actor.span.clone(),
                    ));
                }
            }
            let mut step_names = BTreeSet::new();
            for step in steps {
                if !element_names.insert(step.name.clone()) {
                    diags.push(Diagnostic::new(
                        codes::E_PAR_005,
                        format!("duplicate element `{}` in fragment `{}`", step.name, fragment.name),
                        step.span.clone(),
                    ));
                }
                step_names.insert(step.name.clone());
                for performer in &step.performed_by {
                    if !actors.iter().any(|a| &a.name == performer) {
                        diags.push(Diagnostic::new(
                            codes::E_PAR_006,
                            format!(
                                "step `{}` is performed by `{performer}`, which is not an actor of `{}`",
                                step.name, fragment.name
                            ),
                            step.span.clone(),
                        ));
                    }
                }
            }
            for flow in flows {
                if flow.from_step == flow.to_step {
                    diags.push(Diagnostic::new(
                        codes::E_PAR_008,
                        format!("flow loops step `{}` back to itself", flow.from_step),
                        flow.span.clone(),
                    ));
                }
                for end in [&flow.from_step, &flow.to_step] {
                    if !step_names.contains(end) {
                        diags.push(Diagnostic::new(
                            codes::E_PAR_006,
                            format!("flow references `{end}`, which is not a step of `{}`", fragment.name),
                            flow.span.clone(),
                        ));
                    }
                }
            }
        }
    }
}

// ===== Structural equality =====

/// Rewrites every span in the unit to the dummy span.
pub fn normalize_spans(unit: &mut ModelUnit) {
    unit.span = SourceSpan::dummy();
    for sys in &mut unit.systems {
        sys.span = SourceSpan::dummy();
        for c in &mut sys.couplings {
            c.span = SourceSpan::dummy();
        }
        for p in &mut sys.properties {
            p.span = SourceSpan::dummy();
            if let Some(expr) = &mut p.derivation {
                normalize_expr_spans(expr);
            }
        }
        for f in &mut sys.dimensions {
            f.span = SourceSpan::dummy();
            match &mut f.body {
                FragmentBody::Structural { entities, associations } => {
                    for e in entities {
                        e.span = SourceSpan::dummy();
                        for a in &mut e.attributes {
                            a.span = SourceSpan::dummy();
                        }
                    }
                    for a in associations {
                        a.span = SourceSpan::dummy();
                    }
                }
                FragmentBody::Mechanism { actors, steps, flows } => {
                    for a in actors {
                        a.span = SourceSpan::dummy();
                    }
                    for s in steps {
                        s.span = SourceSpan::dummy();
                    }
                    for fl in flows {
                        fl.span = SourceSpan::dummy();
                    }
                }
            }
        }
        if let Some(explode) = &mut sys.explode {
            explode.span = SourceSpan::dummy();
        }
    }
    for assoc in &mut unit.associations {
        assoc.span = SourceSpan::dummy();
        for m in &mut assoc.mappings {
            m.span = SourceSpan::dummy();
        }
    }
}

fn normalize_expr_spans(expr: &mut DerivationExpr) {
    match expr {
        DerivationExpr::Number { span, .. } => *span = SourceSpan::dummy(),
        DerivationExpr::Fold { span, .. } => *span = SourceSpan::dummy(),
        DerivationExpr::Binary { lhs, rhs, span, .. } => {
            *span = SourceSpan::dummy();
            normalize_expr_spans(lhs);
            normalize_expr_spans(rhs);
        }
    }
}

/// Structural equality of two units: identical declarations in identical
/// order, ignoring where they sat in the source (spans and source path).
pub fn structural_eq(a: &ModelUnit, b: &ModelUnit) -> bool {
    let mut a = a.clone();
    let mut b = b.clone();
    a.source_path = String::new();
    b.source_path = String::new();
    normalize_spans(&mut a);
    normalize_spans(&mut b);
    a == b
}

// ===== Resolved models =====

/// Where a fully qualified path points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolKind {
    System,
    Property,
    Fragment,
    Entity,
    Actor,
    Step,
}

/// Index-based reference into a [`ResolvedModel`]'s units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolRef {
    pub kind: SymbolKind,
    /// Index into `ResolvedModel::units`.
    pub unit: usize,
    /// Index of the system inside that unit.
    pub system: usize,
    /// Fragment index for fragment-scoped symbols.
    pub fragment: Option<usize>,
    /// Element index inside the fragment or property list.
    pub element: Option<usize>,
}

/// One loaded unit inside a resolved model.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedUnit {
    pub unit: ModelUnit,
    /// Normalized loader path of the unit's file.
    pub path: String,
    /// `(unit index, system index)` of the exploded parent system, if any.
    pub parent: Option<(usize, usize)>,
    /// Dotted prefix for fully qualified names of this unit's systems;
    /// empty for the root unit, `"Person."` for the unit Person explodes to.
    pub prefix: String,
}

impl ResolvedUnit {
    pub fn system_path(&self, system_name: &str) -> String {
        format!("{}{}", self.prefix, system_name)
    }
}

/// A whole multi-level model: every unit reachable through explode references,
/// in depth-first pre-order (the root is index 0), with its level tree and a
/// symbol table of fully qualified dotted paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedModel {
    pub units: Vec<ResolvedUnit>,
    /// Fully qualified system path -> index of the unit it explodes into.
    pub level_tree: BTreeMap<String, usize>,
    pub symbols: BTreeMap<String, SymbolRef>,
}

impl ResolvedModel {
    pub fn root(&self) -> &ResolvedUnit {
        &self.units[0]
    }

    /// Resolves a fully qualified path to its declaration, or `None`:
    /// unknown names and the empty path do not resolve.
    pub fn resolve_element_path(&self, path: &ElementPath) -> Option<&SymbolRef> {
        if path.is_empty() {
            return None;
        }
        self.symbols.get(&path.dotted())
    }

    /// The unit a system explodes into, if the system both exists and explodes.
    pub fn child_unit_of(&self, system_path: &str) -> Option<&ResolvedUnit> {
        self.level_tree.get(system_path).map(|&i| &self.units[i])
    }
}
