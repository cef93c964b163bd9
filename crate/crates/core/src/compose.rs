//! Document assembly: template plus face, signature and text layers, batch
//! generation with sidecars, and dataset manifests.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{
    apply_opacity, composite_in_place, merge_alpha, placeholder_template, remove_background_threshold,
    remove_near_white, render_text, resize, rotate_ccw, to_grayscale_with_alpha, FontFace, ImagingError, RasterImage,
    BUILTIN_FONT_PREFIX,
};
use crate::layout::{ComponentKind, ComponentSpec, LayoutSpec};
use crate::persona::{generate_persona, DateFormat, Persona, PersonaError, Profile};

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("asset error: {0}")]
    Asset(String),
    #[error("field error: {0}")]
    Field(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("face supply exhausted: {requested} requested, {available} available")]
    Exhausted { requested: usize, available: usize },
    #[error("manifest syntax error at line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("manifest schema error at line {line}: {reason}")]
    Schema { line: usize, reason: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Main-face variant of the reference design: 628x194 px at opacity 0.65.
pub const REFERENCE_MAIN_FACE: (u32, u32, f64) = (628, 194, 0.65);
/// Ghost-face variant: 25x104 px at opacity 0.5.
pub const REFERENCE_GHOST_FACE: (u32, u32, f64) = (25, 104, 0.5);
/// Signature asset size before rotation.
pub const REFERENCE_SIGNATURE_SIZE: (u32, u32) = (186, 132);
/// Counter-clockwise signature rotation in degrees.
pub const REFERENCE_SIGNATURE_ROTATION: f64 = 15.0;
/// Gray level above which signature scan pixels count as paper.
pub const SIGNATURE_THRESHOLD: u8 = 200;
/// Face pixels with every channel within this distance of white are matted out.
pub const FACE_WHITE_TOLERANCE: u8 = 20;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// A layout with its template raster and fonts loaded.
#[derive(Debug, Clone)]
pub struct PreparedLayout {
    pub layout: LayoutSpec,
    pub template: RasterImage,
    fonts: HashMap<String, Arc<FontFace>>,
}

impl PreparedLayout {
    /// Resolves the template image and every font; relative references are
    /// taken from `base_dir`.
    pub fn new(layout: LayoutSpec, base_dir: &Path) -> Result<Self, ComposeError> {
        let template = load_template(&layout, base_dir)?;
        let mut fonts = HashMap::new();
        for c in &layout.components {
            if let Some(r) = &c.font_ref {
                if !fonts.contains_key(r) {
                    let face = FontFace::resolve(r, base_dir).map_err(|e| ComposeError::Asset(e.to_string()))?;
                    fonts.insert(r.clone(), Arc::new(face));
                }
            }
        }
        Ok(Self {
            layout,
            template,
            fonts,
        })
    }

    pub fn profile(&self) -> Profile {
        if self.layout.template_id == "extranjero" {
            Profile::Extranjero
        } else {
            Profile::Citizen
        }
    }

    fn font(&self, c: &ComponentSpec) -> Result<&FontFace, ComposeError> {
        c.font_ref
            .as_ref()
            .and_then(|r| self.fonts.get(r))
            .map(|f| f.as_ref())
            .ok_or_else(|| ComposeError::Asset(format!("component {} has no font", c.id)))
    }
}

fn load_template(layout: &LayoutSpec, base_dir: &Path) -> Result<RasterImage, ComposeError> {
    let (w, h) = (layout.canvas.width, layout.canvas.height);
    let img = match layout.template_image_ref.strip_prefix(BUILTIN_FONT_PREFIX) {
        Some(id) => builtin_template_image(id, w, h)?,
        None => {
            let path = base_dir.join(&layout.template_image_ref);
            RasterImage::load_png(&path)
                .map_err(|e| ComposeError::Asset(e.to_string()))?
                .to_rgba()
        }
    };
    if (img.width(), img.height()) != (w, h) {
        return Err(ComposeError::Asset(format!(
            "template is {}x{}, canvas is {w}x{h}",
            img.width(),
            img.height()
        )));
    }
    Ok(img)
}

/// Procedural template with a header caption; `extranjero` adds a second caption.
pub fn builtin_template_image(id: &str, width: u32, height: u32) -> Result<RasterImage, ComposeError> {
    let mut img = placeholder_template(width, height)?;
    let font = FontFace::builtin("sans").ok_or_else(|| ComposeError::Asset("bundled font".into()))?;
    let band = (height / 8).max(1) as f32;
    let size = (band * 0.55).max(6.0);
    let caption = render_text("CÉDULA DE IDENTIDAD", &font, size, [245, 245, 250, 255])?;
    let top = ((band - caption.image.height() as f32) / 2.0).round() as i64;
    composite_in_place(&mut img, &caption.image, 14 + caption.left as i64, top);
    if id == "extranjero" {
        let tag = render_text("EXTRANJERO", &font, size, [245, 210, 90, 255])?;
        let x = width as i64 - tag.image.width() as i64 - 14;
        composite_in_place(&mut img, &tag.image, x, top);
    }
    Ok(img)
}

pub struct DocumentSpec<'a> {
    pub layout: &'a PreparedLayout,
    pub persona: Persona,
    pub face: RasterImage,
    pub signature: RasterImage,
    pub seed: u64,
}

/// Where a layer landed on the canvas, after rotation and before clipping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub id: String,
    pub kind: ComponentKind,
    pub x: i64,
    pub y: i64,
    pub width: u32,
    pub height: u32,
    pub rotation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMetadata {
    pub template_id: String,
    pub seed: u64,
    pub tool_version: String,
    pub persona: Persona,
    /// Component id to the exact string handed to the text renderer.
    pub rendered: BTreeMap<String, String>,
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone)]
pub struct GeneratedDocument {
    pub image: RasterImage,
    pub metadata: DocumentMetadata,
}

/// Face post-processing: white-background matting, grayscale (alpha kept),
/// resize to the component box.
pub fn prepare_face(face: &RasterImage, width: u32, height: u32) -> Result<RasterImage, ImagingError> {
    let matted = remove_near_white(face, FACE_WHITE_TOLERANCE);
    let (gray, mask) = to_grayscale_with_alpha(&matted);
    let merged = merge_alpha(&gray, mask.as_ref())?;
    resize(&merged, width, height)
}

/// Signature post-processing: threshold matting, resize, rotation.
pub fn prepare_signature(
    sig: &RasterImage,
    width: u32,
    height: u32,
    rotation_deg: f64,
) -> Result<RasterImage, ImagingError> {
    let matted = remove_background_threshold(sig, SIGNATURE_THRESHOLD);
    Ok(rotate_ccw(&resize(&matted, width, height)?, rotation_deg))
}

fn text_layer(text: &str, font: &FontFace, c: &ComponentSpec) -> Result<RasterImage, ComposeError> {
    let size = c.font_size_px.unwrap_or(0) as f32;
    let mut layer = RasterImage::filled(c.width, c.height, [0, 0, 0, 0])?;
    let ascent = font.ascent(size).round() as i64;
    let step = font.line_height(size).round() as i64;
    for (i, line) in text.split('\n').enumerate() {
        let r = render_text(line, font, size, c.color)?.into_strict()?;
        let top = ascent + i as i64 * step - r.baseline as i64;
        composite_in_place(&mut layer, &r.image, r.left as i64, top);
    }
    Ok(layer)
}

/// Renders every component in z order onto the template.
pub fn compose_document(spec: &DocumentSpec<'_>) -> Result<GeneratedDocument, ComposeError> {
    let prepared = spec.layout;
    let layout = &prepared.layout;
    let mut components: Vec<&ComponentSpec> = layout.components.iter().collect();
    components.sort_by_key(|c| c.z_order);

    let mut rendered = BTreeMap::new();
    for c in &components {
        if c.kind.is_text() {
            let key = c
                .field_key
                .as_deref()
                .ok_or_else(|| ComposeError::Field(format!("component {} has no field_key", c.id)))?;
            let value = spec
                .persona
                .display_field_with(key, DateFormat::default())
                .map_err(|e: PersonaError| ComposeError::Field(format!("{}: {e}", c.id)))?;
            rendered.insert(c.id.clone(), value);
        }
    }

    let mut image = prepared.template.clone();
    let mut placements = Vec::with_capacity(components.len());
    for c in components {
        let layer = match c.kind {
            ComponentKind::Face | ComponentKind::GhostFace => {
                rotate_ccw(&prepare_face(&spec.face, c.width, c.height)?, c.rotation_deg)
            }
            ComponentKind::Signature => prepare_signature(&spec.signature, c.width, c.height, c.rotation_deg)?,
            ComponentKind::TextField | ComponentKind::Mrz => {
                rotate_ccw(&text_layer(&rendered[&c.id], prepared.font(c)?, c)?, c.rotation_deg)
            }
            ComponentKind::StaticGraphic => {
                rotate_ccw(&RasterImage::filled(c.width, c.height, c.color)?, c.rotation_deg)
            }
        };
        let layer = apply_opacity(&layer, c.opacity)?;
        // Rotated layers stay centered on the component box.
        let x = c.x as i64 + (c.width as i64 - layer.width() as i64).div_euclid(2);
        let y = c.y as i64 + (c.height as i64 - layer.height() as i64).div_euclid(2);
        composite_in_place(&mut image, &layer, x, y);
        placements.push(Placement {
            id: c.id.clone(),
            kind: c.kind,
            x,
            y,
            width: layer.width(),
            height: layer.height(),
            rotation_deg: c.rotation_deg,
        });
    }

    Ok(GeneratedDocument {
        image,
        metadata: DocumentMetadata {
            template_id: layout.template_id.clone(),
            seed: spec.seed,
            tool_version: TOOL_VERSION.to_string(),
            persona: spec.persona.clone(),
            rendered,
            placements,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Bonafide,
    SimulatedBonafide,
    Print,
    Screen,
    Pvc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    pub label: ClassLabel,
    pub split: Split,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn split_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::from([("train", 0), ("val", 0), ("test", 0), ("none", 0)]);
        for e in &self.entries {
            let key = match e.split {
                Split::Train => "train",
                Split::Val => "val",
                Split::Test => "test",
                Split::None => "none",
            };
            *out.get_mut(key).expect("all splits present") += 1;
        }
        out
    }

    fn check_unique(&self) -> Result<(), ComposeError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.path.as_str()) {
                return Err(ComposeError::Invariant(format!("duplicate path: {}", e.path)));
            }
        }
        Ok(())
    }
}

/// Seeded shuffle, then contiguous train/val/test runs. Val and test get
/// `floor(fraction * n)`; train takes the remainder.
pub fn split_assign(
    manifest: &DatasetManifest,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetManifest, ComposeError> {
    let (train, val, test) = fractions;
    let ok = [train, val, test].iter().all(|f| f.is_finite() && *f >= 0.0) && train + val + test <= 1.0 + 1e-9;
    if !ok {
        return Err(ComposeError::Invariant(format!("bad split fractions {fractions:?}")));
    }
    let n = manifest.entries.len();
    let take = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
    let n_val = take(val);
    let n_test = take(test).min(n - n_val);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = manifest.clone();
    for (rank, &i) in order.iter().enumerate() {
        out.entries[i].split = if rank < n - n_val - n_test {
            Split::Train
        } else if rank < n - n_test {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(out)
}

/// One JSON object per line.
pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<(), ComposeError> {
    manifest.check_unique()?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for e in &manifest.entries {
        serde_json::to_writer(&mut w, e).map_err(|e| ComposeError::Invariant(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest, ComposeError> {
    parse_manifest(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn parse_manifest(reader: impl BufRead) -> Result<DatasetManifest, ComposeError> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(|e| {
            let reason = e.to_string();
            match e.classify() {
                serde_json::error::Category::Data => ComposeError::Schema { line: i + 1, reason },
                _ => ComposeError::Syntax { line: i + 1, reason },
            }
        })?;
        entries.push(entry);
    }
    let m = DatasetManifest { entries };
    m.check_unique()?;
    Ok(m)
}

/// An image either on disk or already decoded.
#[derive(Debug, Clone)]
pub enum AssetRef {
    File(PathBuf),
    Memory(Arc<RasterImage>),
}

impl AssetRef {
    pub fn load(&self) -> Result<RasterImage, ComposeError> {
        match self {
            AssetRef::File(p) => RasterImage::load_png(p).map_err(|e| ComposeError::Asset(e.to_string())),
            AssetRef::Memory(img) => Ok(img.as_ref().clone()),
        }
    }
}

pub fn document_name(index: usize) -> String {
    format!("doc_{index:05}")
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Writes `n` documents to `out_dir`: item `i` uses face `i`, a seeded pick
/// from the signature pool, and a persona drawn from `mix_seed(master, i)`.
/// Output does not depend on `jobs`.
pub fn generate_batch(
    master_seed: u64,
    n: usize,
    layout: &PreparedLayout,
    faces: &[AssetRef],
    signatures: &[AssetRef],
    out_dir: &Path,
    jobs: usize,
) -> Result<DatasetManifest, ComposeError> {
    if n == 0 {
        return Ok(DatasetManifest::default());
    }
    if faces.len() < n {
        return Err(ComposeError::Exhausted {
            requested: n,
            available: faces.len(),
        });
    }
    if signatures.is_empty() {
        return Err(ComposeError::Asset("signature pool is empty".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let profile = layout.profile();
    let build = |i: usize| -> Result<ManifestEntry, ComposeError> {
        let seed = crate::mix_seed(master_seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signature = &signatures[rng.gen_range(0..signatures.len())];
        let spec = DocumentSpec {
            layout,
            persona: generate_persona(seed, profile),
            face: faces[i].load()?,
            signature: signature.load()?,
            seed,
        };
        let doc = compose_document(&spec)?;
        let name = document_name(i);
        let png = format!("{name}.png");
        doc.image.save_png(&out_dir.join(&png))?;
        let meta = serde_json::to_vec_pretty(&doc.metadata).map_err(|e| ComposeError::Invariant(e.to_string()))?;
        std::fs::write(out_dir.join(format!("{name}.meta.json")), meta)?;
        Ok(ManifestEntry {
            path: png,
            label: ClassLabel::SimulatedBonafide,
            split: Split::None,
            seed,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ComposeError::Invariant(e.to_string()))?;
    let entries = pool.install(|| (0..n).into_par_iter().map(build).collect::<Result<Vec<_>, _>>())?;
    let manifest = DatasetManifest { entries };
    write_manifest(&manifest, &out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Procedural stand-ins for face photos and signature scans, for tests and demos.
pub mod fixtures {
    use super::*;
    use crate::imaging::PixelFormat;

    /// Frontal "portrait" on a white background: head ellipse, hair, eyes, mouth.
    pub fn face(seed: u64, width: u32, height: u32) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let skin: [f64; 3] = [
            rng.gen_range(150.0..235.0),
            rng.gen_range(110.0..195.0),
            rng.gen_range(90.0..170.0),
        ];
        let hair = rng.gen_range(20.0..120.0);
        let (w, h) = (width as f64, height as f64);
        let (cx, cy) = (w / 2.0, h * 0.52);
        let (rx, ry) = (w * rng.gen_range(0.26..0.33), h * rng.gen_range(0.30..0.36));
        let mut px = Vec::with_capacity((width * height * 4) as usize);
        for y in 0..height {
            for x in 0..width {
                let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
                let e = ((fx - cx) / rx).powi(2) + ((fy - cy) / ry).powi(2);
                let eye = [-0.35, 0.35].iter().any(|s| {
                    ((fx - cx - s * rx) / (rx * 0.12)).powi(2) + ((fy - cy + ry * 0.15) / (ry * 0.06)).powi(2) < 1.0
                });
                let mouth = ((fx - cx) / (rx * 0.35)).powi(2) + ((fy - cy - ry * 0.45) / (ry * 0.05)).powi(2) < 1.0;
                let c: [f64; 3] = if e < 1.0 && (fy < cy - ry * 0.6) {
                    [hair, hair * 0.8, hair * 0.6]
                } else if eye {
                    [40.0, 30.0, 30.0]
                } else if mouth {
                    [150.0, 60.0, 60.0]
                } else if e < 1.0 {
                    skin
                } else if fy > cy + ry * 0.9 {
                    [50.0, 50.0, 70.0]
                } else {
                    [255.0, 255.0, 255.0]
                };
                px.extend_from_slice(&[c[0] as u8, c[1] as u8, c[2] as u8, 255]);
            }
        }
        RasterImage::new(width, height, PixelFormat::Rgba8, px).expect("valid dims")
    }

    /// Dark pen strokes on white paper, grayscale.
    pub fn signature(seed: u64, width: u32, height: u32) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut px = vec![245u8; (width * height) as usize];
        let (w, h) = (width as f64, height as f64);
        let strokes = rng.gen_range(2..5);
        for _ in 0..strokes {
            let p: Vec<(f64, f64)> = (0..4)
                .map(|_| (rng.gen_range(0.1..0.9) * w, rng.gen_range(0.2..0.8) * h))
                .collect();
            let ink = rng.gen_range(10u8..60);
            let r = (h / 60.0).max(1.0);
            for step in 0..=400 {
                let t = step as f64 / 400.0;
                let u = 1.0 - t;
                let b = [u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t];
                let x = b.iter().zip(&p).map(|(k, q)| k * q.0).sum::<f64>();
                let y = b.iter().zip(&p).map(|(k, q)| k * q.1).sum::<f64>();
                let (x0, x1) = ((x - r).floor().max(0.0) as u32, ((x + r).ceil() as u32).min(width));
                let (y0, y1) = ((y - r).floor().max(0.0) as u32, ((y + r).ceil() as u32).min(height));
                for yy in y0..y1 {
                    for xx in x0..x1 {
                        px[(yy * width + xx) as usize] = ink;
                    }
                }
            }
        }
        RasterImage::new(width, height, PixelFormat::Gray8, px).expect("valid dims")
    }

    /// Writes `n_faces` face PNGs, `n_signatures` signature PNGs and a
    /// quality CSV (every face comfortably above the default minimums) under `dir`.
    pub fn write_pools(dir: &Path, seed: u64, n_faces: usize, n_signatures: usize) -> Result<(), ComposeError> {
        let faces = dir.join("faces");
        let sigs = dir.join("signatures");
        std::fs::create_dir_all(&faces)?;
        std::fs::create_dir_all(&sigs)?;
        let names: Vec<&str> = crate::qualitygate::DEFAULT_THRESHOLDS.iter().map(|(k, _)| *k).collect();
        let mut csv = format!("Filename;{}\n", names.join(";"));
        for i in 0..n_faces {
            let name = format!("face_{i:04}.png");
            face(crate::mix_seed(seed, i as u64), 128, 160).save_png(&faces.join(&name))?;
            csv.push_str(&name);
            for _ in &names {
                csv.push_str(";90");
            }
            csv.push('\n');
        }
        for i in 0..n_signatures {
            let s = crate::mix_seed(seed ^ 0x5349_474E, i as u64);
            signature(s, 372, 264).save_png(&sigs.join(format!("sig_{i:04}.png")))?;
        }
        std::fs::write(dir.join("ofiq.csv"), csv)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{builtin_template, Canvas};

    fn prepared(id: &str) -> PreparedLayout {
        PreparedLayout::new(builtin_template(id).unwrap(), Path::new(".")).unwrap()
    }

    fn spec(layout: &PreparedLayout, seed: u64) -> DocumentSpec<'_> {
        DocumentSpec {
            layout,
            persona: generate_persona(seed, layout.profile()),
            face: fixtures::face(seed, 96, 120),
            signature: fixtures::signature(seed, 300, 200),
            seed,
        }
    }

    #[test]
    fn empty_layout_returns_template() {
        let mut layout = builtin_template("citizen").unwrap();
        layout.components.clear();
        let p = PreparedLayout::new(layout, Path::new(".")).unwrap();
        let doc = compose_document(&spec(&p, 1)).unwrap();
        assert_eq!(doc.image, p.template);
    }

    #[test]
    fn document_is_deterministic() {
        let p = prepared("citizen");
        let a = compose_document(&spec(&p, 9)).unwrap();
        let b = compose_document(&spec(&p, 9)).unwrap();
        assert_eq!(a.image.encode_png().unwrap(), b.image.encode_png().unwrap());
        assert_eq!(a.metadata, b.metadata);
        assert_eq!((a.image.width(), a.image.height()), (600, 377));
    }

    #[test]
    fn signature_chain_dimensions() {
        let sig = fixtures::signature(3, 300, 200);
        let (w, h) = REFERENCE_SIGNATURE_SIZE;
        let out = prepare_signature(&sig, w, h, REFERENCE_SIGNATURE_ROTATION).unwrap();
        assert_eq!((out.width(), out.height()), (214, 176));
        let p = prepared("citizen");
        let doc = compose_document(&spec(&p, 4)).unwrap();
        let placed = doc.metadata.placements.iter().find(|pl| pl.id == "signature").unwrap();
        assert_eq!((placed.width, placed.height), (214, 176));
    }

    #[test]
    fn rendered_text_matches_persona() {
        let p = prepared("extranjero");
        let s = spec(&p, 12);
        let doc = compose_document(&s).unwrap();
        assert_eq!(doc.metadata.rendered["run"], s.persona.run_display());
        assert_eq!(doc.metadata.rendered["surnames"], s.persona.surnames);
    }

    #[test]
    fn unknown_field_key_is_reported() {
        let mut layout = builtin_template("citizen").unwrap();
        layout.components[2].field_key = Some("shoe_size".into());
        let p = PreparedLayout {
            template: placeholder_template(600, 377).unwrap(),
            fonts: prepared("citizen").fonts,
            layout,
        };
        assert!(matches!(compose_document(&spec(&p, 1)), Err(ComposeError::Field(_))));
    }

    #[test]
    fn template_size_must_match_canvas() {
        let mut layout = builtin_template("citizen").unwrap();
        let dir = tempfile::tempdir().unwrap();
        placeholder_template(10, 10)
            .unwrap()
            .save_png(&dir.path().join("t.png"))
            .unwrap();
        layout.template_image_ref = "t.png".into();
        layout.canvas = Canvas {
            width: 600,
            height: 377,
        };
        assert!(matches!(
            PreparedLayout::new(layout, dir.path()),
            Err(ComposeError::Asset(_))
        ));
    }

    fn manifest(n: usize) -> DatasetManifest {
        DatasetManifest {
            entries: (0..n)
                .map(|i| ManifestEntry {
                    path: format!("doc_{i}.png"),
                    label: ClassLabel::SimulatedBonafide,
                    split: Split::None,
                    seed: i as u64,
                })
                .collect(),
        }
    }

    #[test]
    fn split_counts_floor_with_remainder_to_train() {
        let m = split_assign(&manifest(10), (0.5, 0.2, 0.2), 7).unwrap();
        let c = m.split_counts();
        assert_eq!((c["train"], c["val"], c["test"]), (6, 2, 2));
        assert_eq!(m, split_assign(&manifest(10), (0.5, 0.2, 0.2), 7).unwrap());
        let all = split_assign(&manifest(10), (1.0, 0.0, 0.0), 7).unwrap();
        assert_eq!(all.split_counts()["train"], 10);
        assert!(split_assign(&manifest(3), (0.8, 0.5, 0.0), 1).is_err());
    }

    #[test]
    fn manifest_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let m = split_assign(&manifest(5), (0.6, 0.2, 0.2), 1).unwrap();
        write_manifest(&m, &path).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), m);

        let bad_label = r#"{"path":"a.png","label":"deepfake","split":"none","seed":1}"#;
        assert!(matches!(
            parse_manifest(bad_label.as_bytes()),
            Err(ComposeError::Schema { line: 1, .. })
        ));
        assert!(matches!(
            parse_manifest("{nope".as_bytes()),
            Err(ComposeError::Syntax { .. })
        ));
        let dup = r#"{"path":"a.png","label":"print","split":"none","seed":1}
{"path":"a.png","label":"screen","split":"none","seed":2}"#;
        assert!(matches!(
            parse_manifest(dup.as_bytes()),
            Err(ComposeError::Invariant(_))
        ));
    }

    #[test]
    fn batch_is_reproducible_and_independent_of_jobs() {
        let p = prepared("citizen");
        let faces: Vec<AssetRef> = (0..3)
            .map(|i| AssetRef::Memory(Arc::new(fixtures::face(i, 64, 80))))
            .collect();
        let sigs = vec![AssetRef::Memory(Arc::new(fixtures::signature(1, 200, 140)))];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = generate_batch(5, 3, &p, &faces, &sigs, a.path(), 1).unwrap();
        let mb = generate_batch(5, 3, &p, &faces, &sigs, b.path(), 3).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma.entries.len(), 3);
        for e in &ma.entries {
            assert_eq!(
                std::fs::read(a.path().join(&e.path)).unwrap(),
                std::fs::read(b.path().join(&e.path)).unwrap()
            );
        }
        let empty = tempfile::tempdir().unwrap();
        let none = generate_batch(5, 0, &p, &[], &[], &empty.path().join("out"), 1).unwrap();
        assert!(none.entries.is_empty());
        assert!(!empty.path().join("out").exists());
        assert!(matches!(
            generate_batch(5, 4, &p, &faces, &sigs, a.path(), 1),
            Err(ComposeError::Exhausted {
                requested: 4,
                available: 3
            })
        ));
    }
}
