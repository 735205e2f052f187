//! Recursive-descent parser for SCDL units.
//!
//! [`parse`] turns one source file into a [`ModelUnit`] or a list of
//! diagnostics; it never returns both. Syntax errors trigger panic-mode
//! recovery that skips to the next `;` or the closing `}` of the current
//! block, so independent mistakes in one file are all reported in one run.
//! When the syntax is clean, the unit-level invariant pass
//! ([`crate::ast::check_unit`]) runs before the unit is handed out.
//!
//! The grammar, informally (see docs/language.md for the full reference):
//!
//! ```text
//! model    := "scd" IDENT "{" item* "}"
//! item     := systemDecl | assocDecl
//! system   := ("concrete" | "conceptual") "system" IDENT "{" section* "}"
//! section  := "composition" "{" (IDENT ";")* "}"
//!           | "environment" "{" (IDENT ";")* "}"
//!           | "structure" "{" coupling* "}"
//!           | "mechanism" IDENT ";"
//!           | "properties" "{" prop* "}"
//!           | "dimension" ("structural" | "mechanism") IDENT "{" dimBody "}"
//!           | "explode" STRING ";"
//! coupling := end "--" end ("[" ENERGY "]")? (STRING)? ";"
//! end      := IDENT | "env" "." IDENT
//! prop     := ("intrinsic" | "aggregate" | "emergent") IDENT ":" type ("=" expr)? ";"
//! assoc    := "association" "<<" "system" ">>" IDENT "--" IDENT "{" mapping* "}"
//! mapping  := ("counterpart")? path "<->" path ("[" CARD "," CARD "]")? ";"
//! ```

use crate::ast::*;
use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::lexer::{decode_string, tokenize, Token, TokenKind};
use crate::span::SourceSpan;

/// Maximum brace/paren nesting depth before E-PAR-007.
pub const MAX_NESTING_DEPTH: u32 = 64;

/// Parses one unit of SCDL source. `file` is recorded in every span and as
/// the unit's source path.
pub fn parse(source: &str, file: &str) -> Result<ModelUnit, Vec<Diagnostic>> {
    let tokens = tokenize(source, file)?;
    let (eof_line, eof_col) = end_position(source);
    let mut parser = Parser {
        tokens,
        pos: 0,
        file,
        diags: Vec::new(),
        depth: 0,
        eof_line,
        eof_col,
        reported_eof: false,
    };
    let unit = parser.model();
    let mut diags = parser.diags;
    if diags.is_empty() {
        diags.extend(check_unit(&unit));
    }
    if diags.is_empty() {
        Ok(unit)
    } else {
        sort_diagnostics(&mut diags);
        Err(diags)
    }
}

fn end_position(source: &str) -> (u32, u32) {
    let mut line = 1u32;
    let mut col = 1u32;
    for c in source.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

/// Recovery marker: the caller should resynchronize and continue.
struct Recover;

type PResult<T> = Result<T, Recover>;

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    file: &'a str,
    diags: Vec<Diagnostic>,
    depth: u32,
    eof_line: u32,
    eof_col: u32,
    reported_eof: bool,
}

impl Parser<'_> {
    // ----- cursor -----

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Punct && t.lexeme == p)
    }

    fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && t.lexeme == k)
    }

    fn eof_span(&self) -> SourceSpan {
        SourceSpan::point(self.file, self.eof_line, self.eof_col)
    }

    fn here_span(&self) -> SourceSpan {
        match self.peek() {
            Some(t) => t.span.clone(),
            None => self.eof_span(),
        }
    }

    fn prev_span(&self) -> SourceSpan {
        if self.pos == 0 {
            return self.here_span();
        }
        self.tokens[self.pos - 1].span.clone()
    }

    // ----- errors and recovery -----

    fn error_at(&mut self, code: &str, message: String, span: SourceSpan) {
        self.diags.push(Diagnostic::new(code, message, span));
    }

    /// Reports an unexpected-token error at the cursor. End of file is
    /// reported at most once per parse so a single missing `}` cannot cascade.
    fn unexpected(&mut self, expected: &str) -> Recover {
        match self.peek() {
            Some(t) => {
                let msg = format!("expected {expected}, found `{}`", t.lexeme);
                let span = t.span.clone();
                self.error_at(codes::E_PAR_001, msg, span);
            }
            None => {
                if !self.reported_eof {
                    self.reported_eof = true;
                    let span = self.eof_span();
                    self.error_at(
                        codes::E_PAR_001,
                        format!("unexpected end of file: expected {expected}"),
                        span,
                    );
                }
            }
        }
        Recover
    }

    /// Skips ahead to the next `;` (consumed) or the `}` closing the current
    /// block (left in place), balancing any brackets opened along the way.
    fn sync(&mut self) {
        let mut depth = 0u32;
        while let Some(t) = self.peek() {
            match (t.kind, t.lexeme.as_str()) {
                (TokenKind::Punct, "{") | (TokenKind::Punct, "[") | (TokenKind::Punct, "(") => {
                    depth += 1;
                    self.bump();
                }
                (TokenKind::Punct, "}") => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    self.bump();
                }
                // A stray `]` or `)` belongs to the broken statement, not to
                // the enclosing block; swallow it so every caller loop makes
                // progress (they resynchronize on `}` only).
                (TokenKind::Punct, "]") | (TokenKind::Punct, ")") => {
                    depth = depth.saturating_sub(1);
                    self.bump();
                }
                (TokenKind::Punct, ";") if depth == 0 => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<SourceSpan> {
        if self.at_punct(p) {
            Ok(self.bump().unwrap().span)
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<SourceSpan> {
        if self.at_kw(k) {
            Ok(self.bump().unwrap().span)
        } else {
            Err(self.unexpected(&format!("`{k}`")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                let t = self.bump().unwrap();
                Ok((t.lexeme, t.span))
            }
            Some(t) if t.kind == TokenKind::Keyword => {
                let msg = format!("expected {what}, found reserved word `{}`", t.lexeme);
                let span = t.span.clone();
                self.error_at(codes::E_PAR_001, msg, span);
                Err(Recover)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect_string(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Str => {
                let t = self.bump().unwrap();
                Ok((decode_string(&t.lexeme), t.span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn maybe_string(&mut self) -> Option<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Str => Some(decode_string(&self.bump().unwrap().lexeme)),
            _ => None,
        }
    }

    /// Opens one nesting level; too-deep input is an error at `span`.
    fn enter(&mut self, span: &SourceSpan) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING_DEPTH {
            self.error_at(
                codes::E_PAR_007,
                format!("nesting deeper than {MAX_NESTING_DEPTH} levels"),
                span.clone(),
            );
            Err(Recover)
        } else {
            Ok(())
        }
    }

    fn leave(&mut self) {
        self.depth = self.depth.saturating_sub(1);
    }

    // ----- grammar -----

    fn model(&mut self) -> ModelUnit {
        let mut unit = ModelUnit {
            name: String::new(),
            level_id: String::new(),
            systems: Vec::new(),
            associations: Vec::new(),
            source_path: self.file.to_string(),
            span: SourceSpan::point(self.file, 1, 1),
        };
        let header = (|| -> PResult<(String, SourceSpan)> {
            let start = self.expect_kw("scd")?;
            let (name, _) = self.expect_ident("a model name")?;
            let brace = self.expect_punct("{")?;
            self.enter(&brace)?;
            Ok((name, start))
        })();
        let (name, start) = match header {
            Ok(pair) => pair,
            Err(_) => return unit,
        };
        unit.name = name.clone();
        unit.level_id = name;

        loop {
            if self.at_punct("}") {
                let close = self.bump().unwrap().span;
                self.leave();
                unit.span = start.join(&close);
                break;
            }
            if self.at_end() {
                let _ = self.unexpected("`}` closing the model");
                unit.span = start.join(&self.eof_span());
                return unit;
            }
            if self.at_kw("concrete") || self.at_kw("conceptual") {
                match self.system_decl() {
                    Ok(sys) => unit.systems.push(sys),
                    Err(_) => self.sync(),
                }
            } else if self.at_kw("association") {
                match self.association_decl() {
                    Ok(assoc) => unit.associations.push(assoc),
                    Err(_) => self.sync(),
                }
            } else {
                let _ = self.unknown_decl("a system or association declaration");
                self.sync();
            }
        }

        if let Some(extra) = self.peek() {
            let msg = format!("unexpected content after the model: `{}`", extra.lexeme);
            let span = extra.span.clone();
            self.error_at(codes::E_PAR_001, msg, span);
        }
        unit
    }

    /// Word-like tokens in a declaration position get the dedicated
    /// unknown-keyword code; everything else is a plain unexpected token.
    fn unknown_decl(&mut self, expected: &str) -> Recover {
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Ident | TokenKind::Keyword) => {
                let msg = format!("unknown keyword `{}`; expected {expected}", t.lexeme);
                let span = t.span.clone();
                self.error_at(codes::E_PAR_003, msg, span);
                Recover
            }
            _ => self.unexpected(expected),
        }
    }

    fn system_decl(&mut self) -> PResult<SystemDecl> {
        let kind = if self.at_kw("concrete") { SystemKind::Concrete } else { SystemKind::Conceptual };
        let start = self.bump().unwrap().span;
        self.expect_kw("system")?;
        let (name, _) = self.expect_ident("a system name")?;
        let brace = self.expect_punct("{")?;
        self.enter(&brace)?;

        let mut sys = SystemDecl {
            name,
            kind,
            composition: Vec::new(),
            environment: Vec::new(),
            couplings: Vec::new(),
            mechanisms: Vec::new(),
            properties: Vec::new(),
            dimensions: Vec::new(),
            explode: None,
            span: start.clone(),
        };
        let mut seen = SectionsSeen::default();

        loop {
            if self.at_punct("}") {
                let close = self.bump().unwrap().span;
                self.leave();
                sys.span = start.join(&close);
                return Ok(sys);
            }
            if self.at_end() {
                let _ = self.unexpected("`}` closing the system body");
                self.leave();
                sys.span = start.join(&self.eof_span());
                return Ok(sys);
            }
            if let Err(Recover) = self.section(&mut sys, &mut seen) {
                self.sync();
            }
        }
    }

    fn section(&mut self, sys: &mut SystemDecl, seen: &mut SectionsSeen) -> PResult<()> {
        if self.at_kw("composition") {
            let kw = self.bump().unwrap().span;
            seen.once(self, "composition", &kw)?;
            sys.composition = self.ident_list()?;
        } else if self.at_kw("environment") {
            let kw = self.bump().unwrap().span;
            seen.once(self, "environment", &kw)?;
            sys.environment = self.ident_list()?;
        } else if self.at_kw("structure") {
            let kw = self.bump().unwrap().span;
            seen.once(self, "structure", &kw)?;
            let brace = self.expect_punct("{")?;
            self.enter(&brace)?;
            loop {
                if self.at_punct("}") {
                    self.bump();
                    self.leave();
                    break;
                }
                if self.at_end() {
                    self.leave();
                    return Err(self.unexpected("`}` closing the structure section"));
                }
                match self.coupling() {
                    Ok(c) => sys.couplings.push(c),
                    Err(_) => self.sync(),
                }
            }
        } else if self.at_kw("mechanism") {
            self.bump();
            let (name, _) = self.expect_ident("a mechanism fragment name")?;
            self.expect_punct(";")?;
            sys.mechanisms.push(name);
        } else if self.at_kw("properties") {
            let kw = self.bump().unwrap().span;
            seen.once(self, "properties", &kw)?;
            let brace = self.expect_punct("{")?;
            self.enter(&brace)?;
            loop {
                if self.at_punct("}") {
                    self.bump();
                    self.leave();
                    break;
                }
                if self.at_end() {
                    self.leave();
                    return Err(self.unexpected("`}` closing the properties section"));
                }
                match self.property() {
                    Ok(p) => sys.properties.push(p),
                    Err(_) => self.sync(),
                }
            }
        } else if self.at_kw("dimension") {
            let fragment = self.dimension()?;
            sys.dimensions.push(fragment);
        } else if self.at_kw("explode") {
            let kw = self.bump().unwrap().span;
            if sys.explode.is_some() {
                self.error_at(
                    codes::E_PAR_008,
                    "system already has an explode reference".to_string(),
                    kw,
                );
                return Err(Recover);
            }
            let (path, path_span) = self.expect_string("a quoted unit path")?;
            let end = self.expect_punct(";")?;
            sys.explode = Some(ExplodeRef { path, span: kw.join(&path_span).join(&end) });
        } else {
            return Err(self.unknown_decl(
                "composition, environment, structure, mechanism, properties, dimension or explode",
            ));
        }
        Ok(())
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let brace = self.expect_punct("{")?;
        self.enter(&brace)?;
        let mut names = Vec::new();
        loop {
            if self.at_punct("}") {
                self.bump();
                self.leave();
                return Ok(names);
            }
            if self.at_end() {
                self.leave();
                return Err(self.unexpected("`}` closing the name list"));
            }
            match (|| -> PResult<String> {
                let (name, _) = self.expect_ident("a name")?;
                self.expect_punct(";")?;
                Ok(name)
            })() {
                Ok(name) => names.push(name),
                Err(_) => self.sync(),
            }
        }
    }

    fn coupling_end(&mut self) -> PResult<CouplingEnd> {
        if self.at_kw("env") {
            self.bump();
            self.expect_punct(".")?;
            let (name, _) = self.expect_ident("an environment party name")?;
            Ok(CouplingEnd::environment(&name))
        } else {
            let (name, _) = self.expect_ident("a component name")?;
            Ok(CouplingEnd::component(&name))
        }
    }

    fn coupling(&mut self) -> PResult<Coupling> {
        let start = self.here_span();
        let end_a = self.coupling_end()?;
        self.expect_punct("--")?;
        let end_b = self.coupling_end()?;
        let mut energy = None;
        if self.at_punct("[") {
            self.bump();
            let (name, span) = self.expect_ident("an energy kind")?;
            match EnergyKind::from_name(&name) {
                Some(kind) => energy = Some(kind),
                None => {
                    self.error_at(
                        codes::E_PAR_001,
                        format!(
                            "`{name}` is not an energy kind (mechanical, thermal, kinetic, potential, electric, magnetic, chemical)"
                        ),
                        span,
                    );
                    return Err(Recover);
                }
            }
            self.expect_punct("]")?;
        }
        let label = self.maybe_string();
        let end = self.expect_punct(";")?;
        Ok(Coupling { end_a, end_b, energy, label, span: start.join(&end) })
    }

    fn property(&mut self) -> PResult<PropertyDecl> {
        let classification = if self.at_kw("intrinsic") {
            PropertyClassification::Intrinsic
        } else if self.at_kw("aggregate") {
            PropertyClassification::Aggregate
        } else if self.at_kw("emergent") {
            PropertyClassification::Emergent
        } else {
            return Err(self.unknown_decl("a property (intrinsic, aggregate or emergent)"));
        };
        let start = self.bump().unwrap().span;
        let (name, _) = self.expect_ident("a property name")?;
        self.expect_punct(":")?;
        let value_type = self.value_type()?;
        let derivation = if self.at_punct("=") {
            self.bump();
            Some(self.expr()?)
        } else {
            None
        };
        let end = self.expect_punct(";")?;
        Ok(PropertyDecl { classification, name, value_type, derivation, span: start.join(&end) })
    }

    fn value_type(&mut self) -> PResult<ValueType> {
        for (kw, vt) in
            [("number", ValueType::Number), ("text", ValueType::Text), ("flag", ValueType::Flag)]
        {
            if self.at_kw(kw) {
                self.bump();
                return Ok(vt);
            }
        }
        Err(self.unexpected("a value type (number, text or flag)"))
    }

    // ----- derivation expressions -----

    fn expr(&mut self) -> PResult<DerivationExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.at_punct("+") {
                BinOp::Add
            } else if self.at_punct("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.term()?;
            let span = lhs.span().join(rhs.span());
            lhs = DerivationExpr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
    }

    fn term(&mut self) -> PResult<DerivationExpr> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.at_punct("*") {
                BinOp::Mul
            } else if self.at_punct("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.factor()?;
            let span = lhs.span().join(rhs.span());
            lhs = DerivationExpr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
    }

    fn factor(&mut self) -> PResult<DerivationExpr> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Number => {
                let t = self.bump().unwrap();
                let value: f64 = t.lexeme.parse().expect("number lexeme parses");
                Ok(DerivationExpr::Number { value, span: t.span })
            }
            Some(t) if t.kind == TokenKind::Punct && t.lexeme == "(" => {
                let open = self.bump().unwrap().span;
                self.enter(&open)?;
                let inner = self.expr()?;
                self.expect_punct(")")?;
                self.leave();
                Ok(inner)
            }
            Some(t) if t.kind == TokenKind::Ident => {
                let (name, name_span) = self.expect_ident("a fold")?;
                let Some(op) = FoldOp::from_name(&name) else {
                    self.error_at(
                        codes::E_PAR_001,
                        format!("`{name}` is not a fold (sum, count, min, max or avg)"),
                        name_span,
                    );
                    return Err(Recover);
                };
                self.expect_punct("(")?;
                let (first, _) = self.expect_ident("a component scope")?;
                self.expect_punct(".")?;
                let (property, _) = self.expect_ident("a property name")?;
                let close = self.expect_punct(")")?;
                let scope = if first == "components" {
                    FoldScope::AllComponents
                } else {
                    FoldScope::Named(first)
                };
                Ok(DerivationExpr::Fold { op, scope, property, span: name_span.join(&close) })
            }
            _ => Err(self.unexpected("a number, fold or parenthesized expression")),
        }
    }

    // ----- dimension fragments -----

    fn dimension(&mut self) -> PResult<DimensionFragment> {
        let start = self.expect_kw("dimension")?;
        if self.at_kw("interaction") {
            let kw = self.bump().unwrap().span;
            self.error_at(
                codes::E_DIM_009,
                "interaction dimensions are not supported; the keyword is reserved".to_string(),
                kw,
            );
            // Consume the rest of the declaration so one rejection is reported.
            let _ = self.expect_ident("a fragment name");
            if self.at_punct("{") {
                self.sync_balanced_block();
            }
            return Err(Recover);
        }
        let kind = if self.at_kw("structural") {
            DimensionKind::Structural
        } else if self.at_kw("mechanism") {
            DimensionKind::Mechanism
        } else {
            return Err(self.unexpected("a dimension kind (structural or mechanism)"));
        };
        self.bump();
        let (name, _) = self.expect_ident("a fragment name")?;
        let brace = self.expect_punct("{")?;
        self.enter(&brace)?;
        let body = match kind {
            DimensionKind::Structural => self.structural_body(),
            DimensionKind::Mechanism => self.mechanism_body(),
        };
        let body = match body {
            Ok(b) => b,
            Err(r) => {
                self.leave();
                return Err(r);
            }
        };
        let end = self.prev_span();
        self.leave();
        Ok(DimensionFragment { name, body, span: start.join(&end) })
    }

    /// Skips a balanced `{ ... }` block, consuming both braces.
    fn sync_balanced_block(&mut self) {
        debug_assert!(self.at_punct("{"));
        self.bump();
        let mut depth = 1u32;
        while let Some(t) = self.peek() {
            match (t.kind, t.lexeme.as_str()) {
                (TokenKind::Punct, "{") => depth += 1,
                (TokenKind::Punct, "}") => {
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return;
                    }
                }
                _ => {}
            }
            self.bump();
        }
    }

    fn structural_body(&mut self) -> PResult<FragmentBody> {
        let mut entities = Vec::new();
        let mut associations = Vec::new();
        loop {
            if self.at_punct("}") {
                self.bump();
                return Ok(FragmentBody::Structural { entities, associations });
            }
            if self.at_end() {
                return Err(self.unexpected("`}` closing the structural fragment"));
            }
            if self.at_kw("entity") {
                match self.entity() {
                    Ok(e) => entities.push(e),
                    Err(_) => self.sync(),
                }
            } else if self.at_kw("assoc") {
                match self.entity_association() {
                    Ok(a) => associations.push(a),
                    Err(_) => self.sync(),
                }
            } else {
                let _ = self.unknown_decl("an entity or assoc declaration");
                self.sync();
            }
        }
    }

    fn entity(&mut self) -> PResult<EntityDecl> {
        let start = self.expect_kw("entity")?;
        let (name, _) = self.expect_ident("an entity name")?;
        let brace = self.expect_punct("{")?;
        self.enter(&brace)?;
        let mut attributes = Vec::new();
        loop {
            if self.at_punct("}") {
                let close = self.bump().unwrap().span;
                self.leave();
                return Ok(EntityDecl { name, attributes, span: start.join(&close) });
            }
            if self.at_end() {
                self.leave();
                return Err(self.unexpected("`}` closing the entity"));
            }
            match (|| -> PResult<AttributeDecl> {
                let (attr_name, attr_span) = self.expect_ident("an attribute name")?;
                self.expect_punct(":")?;
                let value_type = self.value_type()?;
                let end = self.expect_punct(";")?;
                Ok(AttributeDecl { name: attr_name, value_type, span: attr_span.join(&end) })
            })() {
                Ok(attr) => attributes.push(attr),
                Err(_) => self.sync(),
            }
        }
    }

    fn entity_association(&mut self) -> PResult<EntityAssociation> {
        let start = self.expect_kw("assoc")?;
        let (entity_a, _) = self.expect_ident("an entity name")?;
        self.expect_punct("[")?;
        let card_a = self.card()?;
        self.expect_punct("]")?;
        self.expect_punct("--")?;
        let (entity_b, _) = self.expect_ident("an entity name")?;
        self.expect_punct("[")?;
        let card_b = self.card()?;
        self.expect_punct("]")?;
        let label = self.maybe_string();
        let end = self.expect_punct(";")?;
        Ok(EntityAssociation { entity_a, card_a, entity_b, card_b, label, span: start.join(&end) })
    }

    fn mechanism_body(&mut self) -> PResult<FragmentBody> {
        let mut actors = Vec::new();
        let mut steps = Vec::new();
        let mut flows = Vec::new();
        loop {
            if self.at_punct("}") {
                self.bump();
                return Ok(FragmentBody::Mechanism { actors, steps, flows });
            }
            if self.at_end() {
                return Err(self.unexpected("`}` closing the mechanism fragment"));
            }
            if self.at_kw("actor") {
                match (|| -> PResult<ActorDecl> {
                    let start = self.bump().unwrap().span;
                    let (name, _) = self.expect_ident("an actor name")?;
                    let role = self.maybe_string().unwrap_or_default();
                    let end = self.expect_punct(";")?;
                    Ok(ActorDecl { name, role, span: start.join(&end) })
                })() {
                    Ok(a) => actors.push(a),
                    Err(_) => self.sync(),
                }
            } else if self.at_kw("step") {
                match (|| -> PResult<StepDecl> {
                    let start = self.bump().unwrap().span;
                    let (name, _) = self.expect_ident("a step name")?;
                    let mut performed_by = Vec::new();
                    if self.at_kw("by") {
                        self.bump();
                        loop {
                            let (actor, _) = self.expect_ident("an actor name")?;
                            performed_by.push(actor);
                            if self.at_punct(",") {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    let end = self.expect_punct(";")?;
                    Ok(StepDecl { name, performed_by, span: start.join(&end) })
                })() {
                    Ok(s) => steps.push(s),
                    Err(_) => self.sync(),
                }
            } else if self.at_kw("flow") {
                match (|| -> PResult<FlowDecl> {
                    let start = self.bump().unwrap().span;
                    let (from_step, _) = self.expect_ident("a step name")?;
                    self.expect_punct("->")?;
                    let (to_step, _) = self.expect_ident("a step name")?;
                    let end = self.expect_punct(";")?;
                    Ok(FlowDecl { from_step, to_step, span: start.join(&end) })
                })() {
                    Ok(f) => flows.push(f),
                    Err(_) => self.sync(),
                }
            } else {
                let _ = self.unknown_decl("an actor, step or flow declaration");
                self.sync();
            }
        }
    }

    fn card(&mut self) -> PResult<Card> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Card => {
                let t = self.bump().unwrap();
                let (min_text, max_text) = t.lexeme.split_once("..").expect("card lexeme has ..");
                let card = match (min_text, max_text) {
                    ("0", "1") => Some(Card::ZERO_OR_ONE),
                    ("0", "*") => Some(Card::ANY),
                    ("1", "*") => Some(Card::ONE_OR_MORE),
                    _ => None,
                };
                match card {
                    Some(c) => Ok(c),
                    None => {
                        self.error_at(
                            codes::E_PAR_008,
                            format!(
                                "`{}` is not a cardinality; use 0..1, 1, 1..*, 0..* or *",
                                t.lexeme
                            ),
                            t.span,
                        );
                        Err(Recover)
                    }
                }
            }
            Some(t) if t.kind == TokenKind::Number && t.lexeme == "1" => {
                self.bump();
                Ok(Card::EXACTLY_ONE)
            }
            Some(t) if t.kind == TokenKind::Punct && t.lexeme == "*" => {
                self.bump();
                Ok(Card::ANY)
            }
            Some(t) if t.kind == TokenKind::Number => {
                let t = self.bump().unwrap();
                self.error_at(
                    codes::E_PAR_008,
                    format!("`{}` is not a cardinality; use 0..1, 1, 1..*, 0..* or *", t.lexeme),
                    t.span,
                );
                Err(Recover)
            }
            _ => Err(self.unexpected("a cardinality (0..1, 1, 1..*, 0..* or *)")),
        }
    }

    // ----- associations -----

    fn association_decl(&mut self) -> PResult<SystemAssociation> {
        let start = self.expect_kw("association")?;
        self.expect_punct("<<")?;
        self.expect_kw("system")?;
        self.expect_punct(">>")?;
        let (system_a, _) = self.expect_ident("a system name")?;
        self.expect_punct("--")?;
        let (system_b, _) = self.expect_ident("a system name")?;
        let brace = self.expect_punct("{")?;
        self.enter(&brace)?;
        let mut mappings = Vec::new();
        loop {
            if self.at_punct("}") {
                let close = self.bump().unwrap().span;
                self.leave();
                return Ok(SystemAssociation { system_a, system_b, mappings, span: start.join(&close) });
            }
            if self.at_end() {
                self.leave();
                return Err(self.unexpected("`}` closing the association"));
            }
            match self.mapping() {
                Ok(m) => mappings.push(m),
                Err(_) => self.sync(),
            }
        }
    }

    fn mapping(&mut self) -> PResult<MappingPair> {
        let start = self.here_span();
        let kind = if self.at_kw("counterpart") {
            self.bump();
            MappingKind::Counterpart
        } else {
            MappingKind::Association
        };
        let path_a = self.element_path()?;
        self.expect_punct("<->")?;
        let path_b = self.element_path()?;
        let mut card_a = None;
        let mut card_b = None;
        if self.at_punct("[") {
            self.bump();
            card_a = Some(self.card()?);
            self.expect_punct(",")?;
            card_b = Some(self.card()?);
            self.expect_punct("]")?;
        }
        let end = self.expect_punct(";")?;
        Ok(MappingPair { kind, path_a, path_b, card_a, card_b, span: start.join(&end) })
    }

    fn element_path(&mut self) -> PResult<ElementPath> {
        let (first, _) = self.expect_ident("an element path")?;
        let mut segments = vec![first];
        while self.at_punct(".") {
            self.bump();
            let (next, _) = self.expect_ident("a path segment")?;
            segments.push(next);
        }
        Ok(ElementPath::new(segments))
    }
}


#[derive(Default)]
struct SectionsSeen {
    composition: bool,
    environment: bool,
    structure: bool,
    properties: bool,
}

impl SectionsSeen {
    /// Marks a one-shot section as seen; repeats are malformed.
    fn once(&mut self, parser: &mut Parser, name: &str, span: &SourceSpan) -> PResult<()> {
        let slot = match name {
            "composition" => &mut self.composition,
            "environment" => &mut self.environment,
            "structure" => &mut self.structure,
            "properties" => &mut self.properties,
            _ => unreachable!("unknown one-shot section {name}"),
        };
        if *slot {
            parser.error_at(
                codes::E_PAR_008,
                format!("duplicate `{name}` section"),
                span.clone(),
            );
            Err(Recover)
        } else {
            *slot = true;
            Ok(())
        }
    }
}
