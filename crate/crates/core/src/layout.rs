//! Declarative card layouts: where every component of a template goes.
//!
//! Layouts are JSON documents (see `docs/layout-format.md`). Parsing is
//! strict: unknown keys are rejected so a layout file pins the output.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::Rgba;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("layout syntax error: {0}")]
    Syntax(String),
    #[error("layout schema error: {0}")]
    Schema(String),
    #[error("layout invariant violated: {}", .0.join("; "))]
    Invariant(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Face,
    GhostFace,
    TextField,
    Signature,
    Mrz,
    StaticGraphic,
}

impl ComponentKind {
    pub fn is_text(self) -> bool {
        matches!(self, ComponentKind::TextField | ComponentKind::Mrz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub id: String,
    pub kind: ComponentKind,
    /// Left edge, top-left origin.
    pub x: u32,
    /// Top edge, y grows downward.
    pub y: u32,
    pub width: u32,
    pub height: u32,
    /// Counter-clockwise, about the component center.
    pub rotation_deg: f64,
    pub opacity: f64,
    pub color: Rgba,
    #[serde(default, rename = "font", skip_serializing_if = "Option::is_none")]
    pub font_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font_size_px: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_key: Option<String>,
    pub z_order: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSpec {
    pub template_id: String,
    pub canvas: Canvas,
    /// Template raster: a path relative to the layout file, or `builtin:<id>`
    /// for the procedural placeholder.
    #[serde(rename = "template_image")]
    pub template_image_ref: String,
    pub components: Vec<ComponentSpec>,
}

impl LayoutSpec {
    pub fn component(&self, id: &str) -> Option<&ComponentSpec> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn field_keys(&self) -> impl Iterator<Item = &str> {
        self.components.iter().filter_map(|c| c.field_key.as_deref())
    }
}

/// Parses and validates a layout document.
pub fn parse_layout(bytes: &[u8]) -> Result<LayoutSpec, LayoutError> {
    let spec: LayoutSpec = serde_json::from_slice(bytes).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => LayoutError::Schema(e.to_string()),
            _ => LayoutError::Syntax(e.to_string()),
        }
    })?;
    let violations = validate_layout(&spec);
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(LayoutError::Invariant(violations))
    }
}

pub fn serialize_layout(spec: &LayoutSpec) -> String {
    serde_json::to_string_pretty(spec).expect("layout serialization is infallible")
}

/// Lists every invariant the layout breaks; empty when valid.
pub fn validate_layout(spec: &LayoutSpec) -> Vec<String> {
    let mut out = Vec::new();
    let Canvas { width: cw, height: ch } = spec.canvas;
    if cw == 0 || ch == 0 {
        out.push(format!("canvas dimensions must be positive: {cw}x{ch}"));
    }
    let mut ids = HashSet::new();
    let mut z_seen = HashSet::new();
    let mut prev_z: Option<i32> = None;
    for c in &spec.components {
        let id = &c.id;
        if !ids.insert(id.as_str()) {
            out.push(format!("duplicate id: {id}"));
        }
        if !z_seen.insert(c.z_order) {
            out.push(format!("z_order not total: {id}"));
        } else if prev_z.is_some_and(|p| c.z_order < p) {
            out.push(format!("components not ordered by z_order: {id}"));
        }
        prev_z = Some(c.z_order);
        if c.width == 0 || c.height == 0 {
            out.push(format!("non-positive size: {id}"));
        }
        if !(0.0..=1.0).contains(&c.opacity) {
            out.push(format!("opacity out of range: {id}"));
        }
        if !c.rotation_deg.is_finite() {
            out.push(format!("non-finite rotation: {id}"));
        }
        if c.x as u64 + c.width as u64 > cw as u64 || c.y as u64 + c.height as u64 > ch as u64 {
            out.push(format!("out of canvas: {id}"));
        }
        if c.kind.is_text() {
            if c.font_ref.is_none() {
                out.push(format!("missing font: {id}"));
            }
            match c.font_size_px {
                None => out.push(format!("missing font_size_px: {id}")),
                Some(0) => out.push(format!("non-positive font_size_px: {id}")),
                Some(_) => {}
            }
            if c.field_key.is_none() {
                out.push(format!("missing field_key: {id}"));
            }
        }
    }
    out
}

const CITIZEN_JSON: &str = include_str!("../assets/layouts/citizen.json");
const EXTRANJERO_JSON: &str = include_str!("../assets/layouts/extranjero.json");

/// The bundled templates: `extranjero` (742x466) then `citizen` (600x377).
///
/// Component placements are illustrative, not measured from issued cards.
pub fn builtin_templates() -> Vec<LayoutSpec> {
    [EXTRANJERO_JSON, CITIZEN_JSON]
        .iter()
        .map(|s| parse_layout(s.as_bytes()).expect("bundled layout is valid"))
        .collect()
}

pub fn builtin_template(id: &str) -> Option<LayoutSpec> {
    builtin_templates().into_iter().find(|l| l.template_id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona::FIELD_KEYS;

    fn text(id: &str, z: i32) -> ComponentSpec {
        ComponentSpec {
            id: id.into(),
            kind: ComponentKind::TextField,
            x: 10,
            y: 10,
            width: 40,
            height: 12,
            rotation_deg: 0.0,
            opacity: 1.0,
            color: [0, 0, 0, 255],
            font_ref: Some("builtin:sans".into()),
            font_size_px: Some(10),
            field_key: Some("surnames".into()),
            z_order: z,
        }
    }

    fn spec(components: Vec<ComponentSpec>) -> LayoutSpec {
        LayoutSpec {
            template_id: "t".into(),
            canvas: Canvas {
                width: 100,
                height: 100,
            },
            template_image_ref: "builtin:t".into(),
            components,
        }
    }

    #[test]
    fn minimal_document() {
        let doc = br#"{"template_id":"t","canvas":{"width":100,"height":100},
            "template_image":"t.png","components":[]}"#;
        let s = parse_layout(doc).unwrap();
        assert!(s.components.is_empty());
        assert_eq!(
            s.canvas,
            Canvas {
                width: 100,
                height: 100
            }
        );
    }

    #[test]
    fn syntax_vs_schema_errors() {
        assert!(matches!(
            parse_layout(b"{\"template_id\":"),
            Err(LayoutError::Syntax(_))
        ));
        let extra = br#"{"template_id":"t","canvas":{"width":1,"height":1},
            "template_image":"t.png","components":[],"dpi":300}"#;
        assert!(matches!(parse_layout(extra), Err(LayoutError::Schema(_))));
        let missing = br#"{"template_id":"t","canvas":{"width":1,"height":1},"components":[]}"#;
        assert!(matches!(parse_layout(missing), Err(LayoutError::Schema(_))));
        let wrong_type = br#"{"template_id":"t","canvas":{"width":"1","height":1},
            "template_image":"t.png","components":[]}"#;
        assert!(matches!(parse_layout(wrong_type), Err(LayoutError::Schema(_))));
    }

    #[test]
    fn out_of_canvas_is_rejected() {
        let mut c = text("name", 1);
        c.x = 90;
        c.width = 20;
        let doc = serialize_layout(&spec(vec![c]));
        match parse_layout(doc.as_bytes()) {
            Err(LayoutError::Invariant(v)) => assert_eq!(v, vec!["out of canvas: name"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_z_order_is_rejected() {
        let doc = serialize_layout(&spec(vec![text("a", 1), text("b", 1)]));
        match parse_layout(doc.as_bytes()) {
            Err(LayoutError::Invariant(v)) => assert!(v[0].starts_with("z_order not total")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_messages() {
        let mut c = text("sig", 1);
        c.opacity = 1.3;
        assert_eq!(validate_layout(&spec(vec![c])), vec!["opacity out of range: sig"]);
        assert_eq!(
            validate_layout(&spec(vec![text("photo", 1), text("photo", 2)])),
            vec!["duplicate id: photo"]
        );
        let mut c = text("mrz", 1);
        c.kind = ComponentKind::Mrz;
        c.font_ref = None;
        c.field_key = None;
        assert_eq!(
            validate_layout(&spec(vec![c])),
            vec!["missing font: mrz", "missing field_key: mrz"]
        );
        assert_eq!(
            validate_layout(&spec(vec![text("a", 2), text("b", 1)])),
            vec!["components not ordered by z_order: b"]
        );
    }

    #[test]
    fn builtin_canvases() {
        let b = builtin_templates();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].template_id, "extranjero");
        assert_eq!((b[0].canvas.width, b[0].canvas.height), (742, 466));
        assert_eq!(b[1].template_id, "citizen");
        assert_eq!((b[1].canvas.width, b[1].canvas.height), (600, 377));
        for l in &b {
            assert!(validate_layout(l).is_empty());
        }
    }

    #[test]
    fn builtin_components_cover_persona_fields() {
        for l in builtin_templates() {
            let kinds: Vec<_> = l.components.iter().map(|c| c.kind).collect();
            for k in [ComponentKind::Face, ComponentKind::GhostFace, ComponentKind::Signature] {
                assert_eq!(kinds.iter().filter(|&&x| x == k).count(), 1, "{k:?}");
            }
            let keys: HashSet<_> = l.field_keys().collect();
            for k in keys.iter() {
                assert!(FIELD_KEYS.contains(k), "dangling field_key {k}");
            }
            for k in [
                "surnames",
                "given_names",
                "nationality",
                "gender",
                "birth_date",
                "document_number",
                "issue_date",
                "expiry_date",
                "run",
            ] {
                assert!(keys.contains(k), "{} lacks {k}", l.template_id);
            }
        }
    }

    #[test]
    fn builtin_signature_uses_post_processing_parameters() {
        for l in builtin_templates() {
            let sig = l
                .components
                .iter()
                .find(|c| c.kind == ComponentKind::Signature)
                .unwrap();
            assert_eq!((sig.width, sig.height), (186, 132));
            assert_eq!(sig.rotation_deg, 15.0);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_component(canvas: u32) -> impl Strategy<Value = ComponentSpec> {
            (
                "[a-z]{1,8}",
                prop_oneof![
                    Just(ComponentKind::Face),
                    Just(ComponentKind::GhostFace),
                    Just(ComponentKind::TextField),
                    Just(ComponentKind::Signature),
                    Just(ComponentKind::Mrz),
                    Just(ComponentKind::StaticGraphic),
                ],
                1..canvas,
                1..canvas,
                -360.0f64..360.0,
                0.0f64..=1.0,
                any::<[u8; 4]>(),
            )
                .prop_flat_map(move |(id, kind, w, h, rot, op, color)| {
                    (0..=canvas - w, 0..=canvas - h).prop_map(move |(x, y)| {
                        let text = kind.is_text();
                        ComponentSpec {
                            id: id.clone(),
                            kind,
                            x,
                            y,
                            width: w,
                            height: h,
                            rotation_deg: rot,
                            opacity: op,
                            color,
                            font_ref: text.then(|| "fonts/a.ttf".to_string()),
                            font_size_px: text.then_some(12),
                            field_key: text.then(|| "surnames".to_string()),
                            z_order: 0,
                        }
                    })
                })
        }

        proptest! {
            #[test]
            fn parse_serialize_round_trip(comps in proptest::collection::vec(arb_component(64), 0..6)) {
                let mut comps = comps;
                for (i, c) in comps.iter_mut().enumerate() {
                    c.id = format!("{}{i}", c.id);
                    c.z_order = i as i32 * 3 - 4;
                }
                let s = LayoutSpec {
                    template_id: "p".into(),
                    canvas: Canvas { width: 64, height: 64 },
                    template_image_ref: "x.png".into(),
                    components: comps,
                };
                let back = parse_layout(serialize_layout(&s).as_bytes()).unwrap();
                prop_assert!(validate_layout(&back).is_empty());
                prop_assert_eq!(back, s);
            }
        }
    }
}
