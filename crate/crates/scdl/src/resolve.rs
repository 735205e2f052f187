//! Multi-level linking.
//!
//! A unit's systems may carry `explode "path";` references to child units
//! that model their internals one level down. [`resolve`] loads the root
//! unit and every unit reachable from it (depth-first, pre-order), checks
//! the links, and produces a [`ResolvedModel`] with the level tree and a
//! symbol table of fully qualified dotted names.
//!
//! Link rules:
//!
//! * paths are forward-slash, relative to the referring file (E-LVL-001 when
//!   a unit cannot be loaded or has errors of its own);
//! * the explode graph must be a tree: cycles are E-LVL-002 and a unit
//!   exploded by two different systems is E-LVL-004;
//! * the child unit must declare exactly one top-level system per component
//!   of the exploding system, by name — both directions of a mismatch are
//!   E-LVL-003.
//!
//! Sources come through the [`UnitLoader`] trait so tests can feed in-memory
//! trees; [`FsLoader`] is the real one.

use std::collections::BTreeMap;

use crate::ast::*;
use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::parser::parse;
use crate::span::SourceSpan;

/// Provides unit source text by normalized path.
pub trait UnitLoader {
    fn load(&self, path: &str) -> Result<String, String>;
}

/// Loads units from the file system; paths are used as given.
pub struct FsLoader;

impl UnitLoader for FsLoader {
    fn load(&self, path: &str) -> Result<String, String> {
        std::fs::read_to_string(path).map_err(|e| e.to_string())
    }
}

/// In-memory loader keyed by exact normalized path.
#[derive(Debug, Default, Clone)]
pub struct MapLoader {
    pub files: BTreeMap<String, String>,
}

impl MapLoader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, path: &str, source: &str) -> Self {
        self.files.insert(path.to_string(), source.to_string());
        self
    }
}

impl UnitLoader for MapLoader {
    fn load(&self, path: &str) -> Result<String, String> {
        self.files.get(path).cloned().ok_or_else(|| "no such unit".to_string())
    }
}

/// Joins `relative` onto `base_dir` and normalizes `.`/`..` lexically.
/// Purely textual: no file system access, forward slashes only.
pub fn normalize_path(base_dir: &str, relative: &str) -> String {
    let joined = if relative.starts_with('/') || base_dir.is_empty() {
        relative.to_string()
    } else {
        format!("{base_dir}/{relative}")
    };
    let absolute = joined.starts_with('/');
    let mut parts: Vec<&str> = Vec::new();
    for segment in joined.split('/') {
        match segment {
            "" | "." => {}
            ".." => match parts.last() {
                Some(last) if *last != ".." => {
                    parts.pop();
                }
                _ if absolute => {}
                _ => parts.push(".."),
            },
            other => parts.push(other),
        }
    }
    let body = parts.join("/");
    if absolute {
        format!("/{body}")
    } else {
        body
    }
}

fn parent_dir(path: &str) -> &str {
    match path.rfind('/') {
        Some(i) => &path[..i],
        None => "",
    }
}

/// Loads and links the whole level hierarchy starting at `root_path`.
/// Any error — unloadable unit, parse failure, cycle, component mismatch —
/// fails the resolve with every diagnostic found.
pub fn resolve(root_path: &str, loader: &dyn UnitLoader) -> Result<ResolvedModel, Vec<Diagnostic>> {
    let mut resolver = Resolver {
        loader,
        units: Vec::new(),
        level_tree: BTreeMap::new(),
        loaded: BTreeMap::new(),
        stack: Vec::new(),
        diags: Vec::new(),
    };
    let root = normalize_path("", root_path);
    resolver.load_unit(&root, None, String::new(), None);
    let Resolver { units, level_tree, mut diags, .. } = resolver;
    if !diags.is_empty() {
        sort_diagnostics(&mut diags);
        return Err(diags);
    }
    let symbols = build_symbols(&units);
    Ok(ResolvedModel { units, level_tree, symbols })
}

struct Resolver<'a> {
    loader: &'a dyn UnitLoader,
    units: Vec<ResolvedUnit>,
    level_tree: BTreeMap<String, usize>,
    /// Completed units by path.
    loaded: BTreeMap<String, usize>,
    /// Paths currently being expanded, root first.
    stack: Vec<String>,
    diags: Vec<Diagnostic>,
}

impl Resolver<'_> {
    /// Loads one unit and recurses into its explode references.
    /// `site` is the explode span in the parent (absent for the root).
    fn load_unit(
        &mut self,
        path: &str,
        parent: Option<(usize, usize)>,
        prefix: String,
        site: Option<&SourceSpan>,
    ) -> Option<usize> {
        let site_span =
            || site.cloned().unwrap_or_else(|| SourceSpan::point(path, 1, 1));
        let source = match self.loader.load(path) {
            Ok(s) => s,
            Err(io) => {
                self.diags.push(Diagnostic::new(
                    codes::E_LVL_001,
                    format!("cannot load unit `{path}`: {io}"),
                    site_span(),
                ));
                return None;
            }
        };
        let unit = match parse(&source, path) {
            Ok(u) => u,
            Err(nested) => {
                if site.is_some() {
                    self.diags.push(Diagnostic::new(
                        codes::E_LVL_001,
                        format!("unit `{path}` has errors"),
                        site_span(),
                    ));
                }
                self.diags.extend(nested);
                return None;
            }
        };

        let index = self.units.len();
        self.units.push(ResolvedUnit { unit, path: path.to_string(), parent, prefix: prefix.clone() });
        self.loaded.insert(path.to_string(), index);
        self.stack.push(path.to_string());

        // Collect explode work up front; recursion grows `self.units`.
        struct Explosion {
            system_index: usize,
            system_name: String,
            composition: Vec<String>,
            explode_path: String,
            explode_span: SourceSpan,
        }
        let work: Vec<Explosion> = self.units[index]
            .unit
            .systems
            .iter()
            .enumerate()
            .filter_map(|(i, sys)| {
                sys.explode.as_ref().map(|e| Explosion {
                    system_index: i,
                    system_name: sys.name.clone(),
                    composition: sys.composition.clone(),
                    explode_path: e.path.clone(),
                    explode_span: e.span.clone(),
                })
            })
            .collect();

        for exp in work {
            let child_path = normalize_path(parent_dir(path), &exp.explode_path);
            if self.stack.contains(&child_path) {
                let first = self.stack.iter().position(|p| p == &child_path).unwrap();
                let mut chain: Vec<&str> =
                    self.stack[first..].iter().map(String::as_str).collect();
                chain.push(&child_path);
                self.diags.push(Diagnostic::new(
                    codes::E_LVL_002,
                    format!("explode cycle: {}", chain.join(" -> ")),
                    exp.explode_span.clone(),
                ));
                continue;
            }
            if self.loaded.contains_key(&child_path) {
                self.diags.push(Diagnostic::new(
                    codes::E_LVL_004,
                    format!("unit `{child_path}` is already exploded by another system"),
                    exp.explode_span.clone(),
                ));
                continue;
            }
            let child_prefix = format!("{prefix}{}.", exp.system_name);
            let Some(child_index) = self.load_unit(
                &child_path,
                Some((index, exp.system_index)),
                child_prefix,
                Some(&exp.explode_span),
            ) else {
                continue;
            };
            self.level_tree.insert(format!("{prefix}{}", exp.system_name), child_index);

            // Component coverage: child systems and parent composition must
            // match by name, one system per component.
            let child_unit = &self.units[child_index].unit;
            let child_names: Vec<&str> =
                child_unit.systems.iter().map(|s| s.name.as_str()).collect();
            for component in &exp.composition {
                if !child_names.contains(&component.as_str()) {
                    self.diags.push(Diagnostic::new(
                        codes::E_LVL_003,
                        format!(
                            "child unit `{child_path}` declares no system for component `{component}` of `{}`",
                            exp.system_name
                        ),
                        exp.explode_span.clone(),
                    ));
                }
            }
            let extras: Vec<(String, SourceSpan)> = child_unit
                .systems
                .iter()
                .filter(|s| !exp.composition.contains(&s.name))
                .map(|s| (s.name.clone(), s.span.clone()))
                .collect();
            for (name, span) in extras {
                self.diags.push(Diagnostic::new(
                    codes::E_LVL_003,
                    format!(
                        "system `{name}` does not correspond to any component of `{}`",
                        exp.system_name
                    ),
                    span,
                ));
            }
        }

        self.stack.pop();
        Some(index)
    }
}

/// Builds the fully qualified symbol table. Systems from every unit go in
/// first so a property or fragment can never shadow a system's path.
fn build_symbols(units: &[ResolvedUnit]) -> BTreeMap<String, SymbolRef> {
    let mut symbols = BTreeMap::new();
    for (unit_index, resolved) in units.iter().enumerate() {
        for (system_index, sys) in resolved.unit.systems.iter().enumerate() {
            symbols.entry(resolved.system_path(&sys.name)).or_insert(SymbolRef {
                kind: SymbolKind::System,
                unit: unit_index,
                system: system_index,
                fragment: None,
                element: None,
            });
        }
    }
    for (unit_index, resolved) in units.iter().enumerate() {
        for (system_index, sys) in resolved.unit.systems.iter().enumerate() {
            let base = resolved.system_path(&sys.name);
            for (property_index, prop) in sys.properties.iter().enumerate() {
                symbols.entry(format!("{base}.{}", prop.name)).or_insert(SymbolRef {
                    kind: SymbolKind::Property,
                    unit: unit_index,
                    system: system_index,
                    fragment: None,
                    element: Some(property_index),
                });
            }
            for (fragment_index, fragment) in sys.dimensions.iter().enumerate() {
                let fragment_base = format!("{base}.{}", fragment.name);
                symbols.entry(fragment_base.clone()).or_insert(SymbolRef {
                    kind: SymbolKind::Fragment,
                    unit: unit_index,
                    system: system_index,
                    fragment: Some(fragment_index),
                    element: None,
                });
                let mut put = |name: &str, kind: SymbolKind, element: usize| {
                    symbols.entry(format!("{fragment_base}.{name}")).or_insert(SymbolRef {
                        kind,
                        unit: unit_index,
                        system: system_index,
                        fragment: Some(fragment_index),
                        element: Some(element),
                    });
                };
                match &fragment.body {
                    FragmentBody::Structural { entities, .. } => {
                        for (i, entity) in entities.iter().enumerate() {
                            put(&entity.name, SymbolKind::Entity, i);
                        }
                    }
                    FragmentBody::Mechanism { actors, steps, .. } => {
                        for (i, actor) in actors.iter().enumerate() {
                            put(&actor.name, SymbolKind::Actor, i);
                        }
                        for (i, step) in steps.iter().enumerate() {
                            put(&step.name, SymbolKind::Step, i);
                        }
                    }
                }
            }
        }
    }
    symbols
}

impl ResolvedModel {
    /// Resolves an association's element path, which is written with local
    /// system names, against the unit it appears in.
    pub fn resolve_in_unit(&self, unit_index: usize, path: &ElementPath) -> Option<&SymbolRef> {
        if path.is_empty() {
            return None;
        }
        self.symbols.get(&format!("{}{}", self.units[unit_index].prefix, path.dotted()))
    }

    /// The system declaration a component name of `units[unit_index]
    /// .systems[system_index]` denotes, as `(unit, system)` indices: the
    /// matching system of the child unit when the owner explodes, otherwise
    /// a sibling system of the same name in the owner's own unit. Components
    /// with neither are atomic — names without declarations.
    pub fn component_system(
        &self,
        unit_index: usize,
        system_index: usize,
        component: &str,
    ) -> Option<(usize, usize)> {
        let resolved = &self.units[unit_index];
        let owner = &resolved.unit.systems[system_index];
        if let Some(&child) = self.level_tree.get(&resolved.system_path(&owner.name)) {
            if let Some(i) =
                self.units[child].unit.systems.iter().position(|s| s.name == component)
            {
                return Some((child, i));
            }
        }
        resolved
            .unit
            .systems
            .iter()
            .position(|s| s.name == component)
            .map(|i| (unit_index, i))
    }
}

/// One step down the hierarchy: the child unit a system explodes into,
/// together with the aggregate and emergent declarations the parent carries.
#[derive(Debug, Clone)]
pub struct DrillView<'a> {
    pub parent_path: String,
    pub parent: &'a SystemDecl,
    pub unit_index: usize,
    pub unit: &'a ResolvedUnit,
    /// The parent's aggregate and emergent properties, which the child level
    /// is expected to account for.
    pub carried: Vec<&'a PropertyDecl>,
}

/// Navigates from a fully qualified system path to the unit it explodes
/// into. Unknown path: E-QRY-001. Known but unexploded system: E-QRY-002.
pub fn drill_down<'a>(
    model: &'a ResolvedModel,
    system_path: &str,
) -> Result<DrillView<'a>, Vec<Diagnostic>> {
    let query_span = || SourceSpan::point(&model.root().path, 1, 1);
    let Some(symbol) = model.symbols.get(system_path) else {
        return Err(vec![Diagnostic::new(
            codes::E_QRY_001,
            format!("no system named `{system_path}`"),
            query_span(),
        )]);
    };
    if symbol.kind != SymbolKind::System {
        return Err(vec![Diagnostic::new(
            codes::E_QRY_001,
            format!("`{system_path}` is not a system"),
            query_span(),
        )]);
    }
    let parent = &model.units[symbol.unit].unit.systems[symbol.system];
    let Some(&unit_index) = model.level_tree.get(system_path) else {
        return Err(vec![Diagnostic::new(
            codes::E_QRY_002,
            format!("system `{system_path}` does not explode into a child unit"),
            query_span(),
        )]);
    };
    let carried = parent
        .properties
        .iter()
        .filter(|p| p.classification != PropertyClassification::Intrinsic)
        .collect();
    Ok(DrillView {
        parent_path: system_path.to_string(),
        parent,
        unit_index,
        unit: &model.units[unit_index],
        carried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level_loader() -> MapLoader {
        MapLoader::new()
            .with(
                "root.scd",
                r#"
                scd org {
                  concrete system Person {
                    composition { PersonAsEHR; PersonAsGenome; }
                    properties { emergent anxiety: number; aggregate load: number = count(components.kind); }
                    explode "person.scd";
                  }
                }
                "#,
            )
            .with(
                "person.scd",
                r#"
                scd person {
                  conceptual system PersonAsEHR {
                    composition { Symptoms; }
                    dimension structural EHRView { entity Diagnosis { } }
                  }
                  conceptual system PersonAsGenome {
                    composition { Variant1; }
                    properties { intrinsic kind: number; }
                  }
                }
                "#,
            )
    }

    #[test]
    fn two_levels_link_with_prefixes_and_symbols() {
        let model = resolve("root.scd", &two_level_loader()).expect("resolves");
        assert_eq!(model.units.len(), 2);
        assert_eq!(model.root().path, "root.scd");
        assert_eq!(model.units[1].path, "person.scd");
        assert_eq!(model.units[1].parent, Some((0, 0)));
        assert_eq!(model.units[1].prefix, "Person.");
        assert_eq!(model.level_tree.get("Person"), Some(&1));

        let sys = model.symbols.get("Person.PersonAsEHR").expect("system symbol");
        assert_eq!(sys.kind, SymbolKind::System);
        let entity = model
            .symbols
            .get("Person.PersonAsEHR.EHRView.Diagnosis")
            .expect("entity symbol");
        assert_eq!(entity.kind, SymbolKind::Entity);
        let prop = model.symbols.get("Person.anxiety").expect("property symbol");
        assert_eq!(prop.kind, SymbolKind::Property);
    }

    #[test]
    fn relative_paths_resolve_against_the_referring_file() {
        let loader = MapLoader::new()
            .with(
                "models/root.scd",
                r#"scd a { concrete system Top { composition { Mid; } explode "sub/mid.scd"; } }"#,
            )
            .with(
                "models/sub/mid.scd",
                r#"scd b { concrete system Mid { composition { Leaf; } explode "../leaf.scd"; } }"#,
            )
            .with("models/leaf.scd", r#"scd c { concrete system Leaf { } }"#);
        let model = resolve("models/root.scd", &loader).expect("resolves");
        let paths: Vec<&str> = model.units.iter().map(|u| u.path.as_str()).collect();
        assert_eq!(paths, ["models/root.scd", "models/sub/mid.scd", "models/leaf.scd"]);
        assert_eq!(model.units[2].prefix, "Top.Mid.");
        assert!(model.symbols.contains_key("Top.Mid.Leaf"));
    }

    #[test]
    fn normalize_path_is_lexical() {
        assert_eq!(normalize_path("a/b", "c.scd"), "a/b/c.scd");
        assert_eq!(normalize_path("a/b", "../c.scd"), "a/c.scd");
        assert_eq!(normalize_path("a/b", "./c/./d.scd"), "a/b/c/d.scd");
        assert_eq!(normalize_path("", "c.scd"), "c.scd");
        assert_eq!(normalize_path("a", "../../c.scd"), "../c.scd");
        assert_eq!(normalize_path("/x/y", "../z.scd"), "/x/z.scd");
        assert_eq!(normalize_path("a/b", "/abs/c.scd"), "/abs/c.scd");
    }

    #[test]
    fn explode_cycles_are_reported_once() {
        let loader = MapLoader::new()
            .with(
                "a.scd",
                r#"scd a { concrete system A { composition { B; } explode "b.scd"; } }"#,
            )
            .with(
                "b.scd",
                r#"scd b { concrete system B { composition { A; } explode "a.scd"; } }"#,
            );
        let diags = resolve("a.scd", &loader).expect_err("cycle");
        let cycles: Vec<_> = diags.iter().filter(|d| d.code == codes::E_LVL_002).collect();
        assert_eq!(cycles.len(), 1, "{diags:?}");
        assert_eq!(cycles[0].span.file, "b.scd");
        assert!(cycles[0].message.contains("a.scd -> b.scd -> a.scd"), "{}", cycles[0].message);
    }

    #[test]
    fn a_unit_exploded_twice_is_reported() {
        let loader = MapLoader::new()
            .with(
                "root.scd",
                r#"
                scd r {
                  concrete system A { composition { X; } explode "shared.scd"; }
                  concrete system B { composition { X; } explode "shared.scd"; }
                }
                "#,
            )
            .with("shared.scd", r#"scd s { concrete system X { } }"#);
        let diags = resolve("root.scd", &loader).expect_err("duplicate explosion");
        let dupes: Vec<_> = diags.iter().filter(|d| d.code == codes::E_LVL_004).collect();
        assert_eq!(dupes.len(), 1, "{diags:?}");
    }

    #[test]
    fn component_name_mismatches_are_reported_both_ways() {
        let loader = MapLoader::new()
            .with(
                "root.scd",
                r#"scd r { concrete system P { composition { Wanted; } explode "child.scd"; } }"#,
            )
            .with("child.scd", r#"scd c { concrete system Surprise { } }"#);
        let diags = resolve("root.scd", &loader).expect_err("mismatch");
        let mismatches: Vec<_> = diags.iter().filter(|d| d.code == codes::E_LVL_003).collect();
        assert_eq!(mismatches.len(), 2, "{diags:?}");
        assert!(mismatches.iter().any(|d| d.message.contains("`Wanted`") && d.span.file == "root.scd"));
        assert!(mismatches.iter().any(|d| d.message.contains("`Surprise`") && d.span.file == "child.scd"));
    }

    #[test]
    fn unloadable_child_is_e_lvl_001_at_the_explode_site() {
        let loader = MapLoader::new().with(
            "root.scd",
            r#"scd r { concrete system P { composition { C; } explode "missing.scd"; } }"#,
        );
        let diags = resolve("root.scd", &loader).expect_err("missing child");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::E_LVL_001);
        assert_eq!(diags[0].span.file, "root.scd");
        assert!(diags[0].message.contains("missing.scd"));
    }

    #[test]
    fn broken_child_reports_link_error_plus_nested_diagnostics() {
        let loader = MapLoader::new()
            .with(
                "root.scd",
                r#"scd r { concrete system P { composition { C; } explode "child.scd"; } }"#,
            )
            .with("child.scd", "scd c { concrete system C {");
        let diags = resolve("root.scd", &loader).expect_err("broken child");
        assert!(diags.iter().any(|d| d.code == codes::E_LVL_001 && d.span.file == "root.scd"));
        assert!(diags.iter().any(|d| d.code == codes::E_PAR_001 && d.span.file == "child.scd"));
    }

    #[test]
    fn drill_down_navigates_and_reports_query_errors() {
        let model = resolve("root.scd", &two_level_loader()).expect("resolves");
        let view = drill_down(&model, "Person").expect("drills");
        assert_eq!(view.unit.path, "person.scd");
        assert_eq!(view.parent.name, "Person");
        assert_eq!(view.carried.len(), 2);

        let missing = drill_down(&model, "Nobody").expect_err("unknown");
        assert_eq!(missing[0].code, codes::E_QRY_001);
        let unexploded = drill_down(&model, "Person.PersonAsEHR").expect_err("no child");
        assert_eq!(unexploded[0].code, codes::E_QRY_002);
    }

    #[test]
    fn root_parse_errors_pass_through() {
        let loader = MapLoader::new().with("root.scd", "scd r { concrete system X {");
        let diags = resolve("root.scd", &loader).expect_err("root is broken");
        assert!(diags.iter().all(|d| d.span.file == "root.scd"));
        assert!(diags.iter().any(|d| d.code == codes::E_PAR_001));
    }

    #[test]
    fn missing_root_is_reported() {
        let diags = resolve("nowhere.scd", &MapLoader::new()).expect_err("no root");
        assert_eq!(diags[0].code, codes::E_LVL_001);
    }
}
