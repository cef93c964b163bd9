//! Raster primitives for the post-processing and compositing chain.
//!
//! Every operation takes its inputs by reference and returns a new image.
//! Float-to-byte conversions round half-up (`floor(v + 0.5)`), so outputs are
//! bit-exact across platforms.

use std::path::Path;

use ab_glyph::{Font, FontVec, PxScale, ScaleFont};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("invalid dimensions {width}x{height}")]
    Range { width: u32, height: u32 },
    #[error("value out of range: {0}")]
    Value(String),
    #[error("buffer length {actual} does not match {expected}")]
    Buffer { expected: usize, actual: usize },
    #[error("expected {expected:?} image, got {actual:?}")]
    Format { expected: PixelFormat, actual: PixelFormat },
    #[error("font error: {0}")]
    Font(String),
    #[error("glyphs missing from font: {0:?}")]
    Glyph(Vec<char>),
    #[error("image decode/encode failed: {0}")]
    Codec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelFormat {
    Gray8,
    Rgba8,
}

impl PixelFormat {
    pub fn channels(self) -> usize {
        match self {
            PixelFormat::Gray8 => 1,
            PixelFormat::Rgba8 => 4,
        }
    }
}

/// Straight (non-premultiplied) 8-bit RGBA color.
pub type Rgba = [u8; 4];

/// Row-major pixel buffer, either single-channel gray or straight-alpha RGBA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    format: PixelFormat,
    pixels: Vec<u8>,
}

#[inline]
pub(crate) fn round_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

impl RasterImage {
    pub fn new(width: u32, height: u32, format: PixelFormat, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::Range { width, height });
        }
        let expected = width as usize * height as usize * format.channels();
        if pixels.len() != expected {
            return Err(ImagingError::Buffer {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            format,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, color: Rgba) -> Result<Self, ImagingError> {
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * 4);
        for _ in 0..n {
            pixels.extend_from_slice(&color);
        }
        Self::new(width, height, PixelFormat::Rgba8, pixels)
    }

    pub fn gray_filled(width: u32, height: u32, value: u8) -> Result<Self, ImagingError> {
        Self::new(
            width,
            height,
            PixelFormat::Gray8,
            vec![value; width as usize * height as usize],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn format(&self) -> PixelFormat {
        self.format
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn channels(&self) -> usize {
        self.format.channels()
    }

    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels()
    }

    /// Pixel as RGBA; gray pixels are expanded with alpha 255.
    pub fn rgba_at(&self, x: u32, y: u32) -> Rgba {
        let i = self.index(x, y);
        match self.format {
            PixelFormat::Gray8 => {
                let v = self.pixels[i];
                [v, v, v, 255]
            }
            PixelFormat::Rgba8 => [
                self.pixels[i],
                self.pixels[i + 1],
                self.pixels[i + 2],
                self.pixels[i + 3],
            ],
        }
    }

    pub fn gray_at(&self, x: u32, y: u32) -> u8 {
        match self.format {
            PixelFormat::Gray8 => self.pixels[self.index(x, y)],
            PixelFormat::Rgba8 => luma(self.rgba_at(x, y)),
        }
    }

    pub fn to_rgba(&self) -> RasterImage {
        match self.format {
            PixelFormat::Rgba8 => self.clone(),
            PixelFormat::Gray8 => {
                let mut out = Vec::with_capacity(self.pixels.len() * 4);
                for &v in &self.pixels {
                    out.extend_from_slice(&[v, v, v, 255]);
                }
                RasterImage {
                    width: self.width,
                    height: self.height,
                    format: PixelFormat::Rgba8,
                    pixels: out,
                }
            }
        }
    }

    /// Copy of the sub-rectangle clipped to the image; `None` if empty.
    pub fn crop(&self, x: i64, y: i64, width: u32, height: u32) -> Option<RasterImage> {
        let x0 = x.max(0);
        let y0 = y.max(0);
        let x1 = (x + width as i64).min(self.width as i64);
        let y1 = (y + height as i64).min(self.height as i64);
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        let ch = self.channels();
        let mut out = Vec::with_capacity(((x1 - x0) * (y1 - y0)) as usize * ch);
        for row in y0..y1 {
            let start = self.index(x0 as u32, row as u32);
            let end = start + (x1 - x0) as usize * ch;
            out.extend_from_slice(&self.pixels[start..end]);
        }
        Some(RasterImage {
            width: (x1 - x0) as u32,
            height: (y1 - y0) as u32,
            format: self.format,
            pixels: out,
        })
    }

    pub fn load_png(path: &Path) -> Result<RasterImage, ImagingError> {
        let img = image::open(path).map_err(|e| ImagingError::Codec(format!("{}: {e}", path.display())))?;
        Ok(from_dynamic(img))
    }

    pub fn decode(bytes: &[u8]) -> Result<RasterImage, ImagingError> {
        let img = image::load_from_memory(bytes).map_err(|e| ImagingError::Codec(e.to_string()))?;
        Ok(from_dynamic(img))
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, ImagingError> {
        use image::ImageEncoder;
        let mut out = Vec::new();
        let color = match self.format {
            PixelFormat::Gray8 => image::ExtendedColorType::L8,
            PixelFormat::Rgba8 => image::ExtendedColorType::Rgba8,
        };
        image::codecs::png::PngEncoder::new(&mut out)
            .write_image(&self.pixels, self.width, self.height, color)
            .map_err(|e| ImagingError::Codec(e.to_string()))?;
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImagingError> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }
}

fn from_dynamic(img: image::DynamicImage) -> RasterImage {
    use image::DynamicImage;
    match img {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            RasterImage {
                width: w,
                height: h,
                format: PixelFormat::Gray8,
                pixels: g.into_raw(),
            }
        }
        other => {
            let rgba = other.to_rgba8();
            let (w, h) = rgba.dimensions();
            RasterImage {
                width: w,
                height: h,
                format: PixelFormat::Rgba8,
                pixels: rgba.into_raw(),
            }
        }
    }
}

/// BT.601 luma with integer half-up rounding.
#[inline]
pub fn luma(px: Rgba) -> u8 {
    let sum = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
    ((sum + 500) / 1000) as u8
}

/// Grayscale conversion. The alpha channel, if any, is dropped; use
/// [`to_grayscale_with_alpha`] to keep it as a separate mask.
pub fn to_grayscale(img: &RasterImage) -> RasterImage {
    to_grayscale_with_alpha(img).0
}

pub fn to_grayscale_with_alpha(img: &RasterImage) -> (RasterImage, Option<RasterImage>) {
    match img.format {
        PixelFormat::Gray8 => (img.clone(), None),
        PixelFormat::Rgba8 => {
            let n = img.width as usize * img.height as usize;
            let mut gray = Vec::with_capacity(n);
            let mut mask = Vec::with_capacity(n);
            for px in img.pixels.chunks_exact(4) {
                gray.push(luma([px[0], px[1], px[2], px[3]]));
                mask.push(px[3]);
            }
            let mk = |pixels| RasterImage {
                width: img.width,
                height: img.height,
                format: PixelFormat::Gray8,
                pixels,
            };
            (mk(gray), Some(mk(mask)))
        }
    }
}

/// Gray image plus optional alpha mask back to RGBA.
pub fn merge_alpha(gray: &RasterImage, mask: Option<&RasterImage>) -> Result<RasterImage, ImagingError> {
    expect_format(gray, PixelFormat::Gray8)?;
    if let Some(m) = mask {
        expect_format(m, PixelFormat::Gray8)?;
        if (m.width, m.height) != (gray.width, gray.height) {
            return Err(ImagingError::Value("mask dimensions differ".into()));
        }
    }
    let mut out = Vec::with_capacity(gray.pixels.len() * 4);
    for (i, &v) in gray.pixels.iter().enumerate() {
        let a = mask.map_or(255, |m| m.pixels[i]);
        out.extend_from_slice(&[v, v, v, a]);
    }
    RasterImage::new(gray.width, gray.height, PixelFormat::Rgba8, out)
}

fn expect_format(img: &RasterImage, format: PixelFormat) -> Result<(), ImagingError> {
    if img.format != format {
        return Err(ImagingError::Format {
            expected: format,
            actual: img.format,
        });
    }
    Ok(())
}

/// Threshold matting for grayscale scans: values strictly greater than
/// `threshold` become transparent.
pub fn remove_background_threshold(img: &RasterImage, threshold: u8) -> RasterImage {
    let gray = to_grayscale(img);
    let mut out = Vec::with_capacity(gray.pixels.len() * 4);
    for &v in &gray.pixels {
        let a = if v > threshold { 0 } else { 255 };
        out.extend_from_slice(&[v, v, v, a]);
    }
    RasterImage {
        width: gray.width,
        height: gray.height,
        format: PixelFormat::Rgba8,
        pixels: out,
    }
}

/// Near-white matting: pixels with `min(R, G, B) >= 255 - tol` become transparent.
pub fn remove_near_white(img: &RasterImage, tol: u8) -> RasterImage {
    let mut out = img.to_rgba();
    let cutoff = 255 - tol;
    for px in out.pixels.chunks_exact_mut(4) {
        if px[0].min(px[1]).min(px[2]) >= cutoff {
            px[3] = 0;
        }
    }
    out
}

/// Premultiplied f64 working copy with 4 channels.
fn premultiplied(img: &RasterImage) -> Vec<[f64; 4]> {
    match img.format {
        PixelFormat::Gray8 => img
            .pixels
            .iter()
            .map(|&v| [v as f64, v as f64, v as f64, 255.0])
            .collect(),
        PixelFormat::Rgba8 => img
            .pixels
            .chunks_exact(4)
            .map(|p| {
                let a = p[3] as f64 / 255.0;
                [p[0] as f64 * a, p[1] as f64 * a, p[2] as f64 * a, p[3] as f64]
            })
            .collect(),
    }
}

fn unpremultiply(px: [f64; 4]) -> Rgba {
    let a = px[3];
    let alpha = round_u8(a);
    if alpha == 0 {
        return [0, 0, 0, 0];
    }
    let scale = 255.0 / a;
    [
        round_u8(px[0] * scale),
        round_u8(px[1] * scale),
        round_u8(px[2] * scale),
        alpha,
    ]
}

/// Bilinear resize with pixel-center alignment. RGBA is interpolated in
/// premultiplied space.
pub fn resize(img: &RasterImage, width: u32, height: u32) -> Result<RasterImage, ImagingError> {
    if width == 0 || height == 0 {
        return Err(ImagingError::Range { width, height });
    }
    if (width, height) == (img.width, img.height) {
        return Ok(img.clone());
    }
    let src = premultiplied(img);
    let (sw, sh) = (img.width as usize, img.height as usize);
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    let ch = img.channels();
    let mut out = Vec::with_capacity(width as usize * height as usize * ch);
    for y in 0..height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let ty = fy - y0 as f64;
        for x in 0..width {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let tx = fx - x0 as f64;
            let mut acc = [0.0; 4];
            for (k, a) in acc.iter_mut().enumerate() {
                let top = src[y0 * sw + x0][k] * (1.0 - tx) + src[y0 * sw + x1][k] * tx;
                let bot = src[y1 * sw + x0][k] * (1.0 - tx) + src[y1 * sw + x1][k] * tx;
                *a = top * (1.0 - ty) + bot * ty;
            }
            match img.format {
                PixelFormat::Gray8 => out.push(round_u8(acc[0])),
                PixelFormat::Rgba8 => out.extend_from_slice(&unpremultiply(acc)),
            }
        }
    }
    RasterImage::new(width, height, img.format, out)
}

/// Dimension of a rotated extent, snapping values within 1e-6 of an integer
/// so exact quarter turns do not grow the canvas.
fn rotated_extent(v: f64) -> u32 {
    let r = v.round();
    let v = if (v - r).abs() < 1e-6 { r } else { v.ceil() };
    (v as u32).max(1)
}

/// Bounding-box size of a `width`x`height` rectangle rotated by `degrees`.
pub fn rotated_dims(width: u32, height: u32, degrees: f64) -> (u32, u32) {
    let t = degrees.to_radians();
    let (s, c) = (t.sin().abs(), t.cos().abs());
    let (w, h) = (width as f64, height as f64);
    (rotated_extent(w * c + h * s), rotated_extent(w * s + h * c))
}

/// Counter-clockwise rotation about the image center. The canvas grows to the
/// rotated bounding box; uncovered pixels are fully transparent.
pub fn rotate_ccw(img: &RasterImage, degrees: f64) -> RasterImage {
    let img = img.to_rgba();
    if degrees.rem_euclid(360.0) == 0.0 {
        return img;
    }
    let (ow, oh) = rotated_dims(img.width, img.height, degrees);
    let src = premultiplied(&img);
    let (sw, sh) = (img.width as i64, img.height as i64);
    let t = degrees.to_radians();
    let (sin, cos) = t.sin_cos();
    let (scx, scy) = (img.width as f64 / 2.0, img.height as f64 / 2.0);
    let (ocx, ocy) = (ow as f64 / 2.0, oh as f64 / 2.0);

    let sample = |x: i64, y: i64| -> [f64; 4] {
        if x < 0 || y < 0 || x >= sw || y >= sh {
            [0.0; 4]
        } else {
            src[(y * sw + x) as usize]
        }
    };

    let mut out = Vec::with_capacity(ow as usize * oh as usize * 4);
    for y in 0..oh {
        for x in 0..ow {
            // Output offset from center in a y-up frame, rotated back by -t.
            let dx = x as f64 + 0.5 - ocx;
            let dy = ocy - (y as f64 + 0.5);
            let rx = dx * cos + dy * sin;
            let ry = -dx * sin + dy * cos;
            let fx = scx + rx - 0.5;
            let fy = scy - ry - 0.5;
            let x0 = fx.floor();
            let y0 = fy.floor();
            let (tx, ty) = (fx - x0, fy - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let mut acc = [0.0; 4];
            let p00 = sample(x0, y0);
            let p10 = sample(x0 + 1, y0);
            let p01 = sample(x0, y0 + 1);
            let p11 = sample(x0 + 1, y0 + 1);
            for k in 0..4 {
                let top = p00[k] * (1.0 - tx) + p10[k] * tx;
                let bot = p01[k] * (1.0 - tx) + p11[k] * tx;
                acc[k] = top * (1.0 - ty) + bot * ty;
            }
            out.extend_from_slice(&unpremultiply(acc));
        }
    }
    RasterImage {
        width: ow,
        height: oh,
        format: PixelFormat::Rgba8,
        pixels: out,
    }
}

/// Scales every pixel's alpha by `alpha`.
pub fn apply_opacity(img: &RasterImage, alpha: f64) -> Result<RasterImage, ImagingError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ImagingError::Value(format!("opacity {alpha} outside [0, 1]")));
    }
    let mut out = img.to_rgba();
    for px in out.pixels.chunks_exact_mut(4) {
        px[3] = round_u8(px[3] as f64 * alpha);
    }
    Ok(out)
}

/// Source-over blend of a single straight-alpha pixel.
#[inline]
pub fn blend_over(src: Rgba, dst: Rgba) -> Rgba {
    match src[3] {
        0 => dst,
        255 => src,
        sa => {
            let a_s = sa as f64 / 255.0;
            let a_b = dst[3] as f64 / 255.0;
            let out_a = a_s + a_b * (1.0 - a_s);
            let wb = a_b * (1.0 - a_s);
            let mut out = [0u8; 4];
            for k in 0..3 {
                out[k] = round_u8((src[k] as f64 * a_s + dst[k] as f64 * wb) / out_a);
            }
            out[3] = round_u8(out_a * 255.0);
            out
        }
    }
}

/// Source-over composite of `layer` onto `base` with the layer's top-left at
/// `(x, y)`; anything falling outside `base` is clipped.
pub fn composite(base: &RasterImage, layer: &RasterImage, x: i64, y: i64) -> RasterImage {
    let mut out = base.to_rgba();
    composite_in_place(&mut out, layer, x, y);
    out
}

pub(crate) fn composite_in_place(base: &mut RasterImage, layer: &RasterImage, x: i64, y: i64) {
    debug_assert_eq!(base.format, PixelFormat::Rgba8);
    let lx0 = (-x).max(0);
    let ly0 = (-y).max(0);
    let lx1 = (layer.width as i64).min(base.width as i64 - x);
    let ly1 = (layer.height as i64).min(base.height as i64 - y);
    for ly in ly0..ly1 {
        for lx in lx0..lx1 {
            let src = layer.rgba_at(lx as u32, ly as u32);
            let bi = base.index((x + lx) as u32, (y + ly) as u32);
            let dst = [
                base.pixels[bi],
                base.pixels[bi + 1],
                base.pixels[bi + 2],
                base.pixels[bi + 3],
            ];
            base.pixels[bi..bi + 4].copy_from_slice(&blend_over(src, dst));
        }
    }
}

/// A loaded scalable font.
pub struct FontFace {
    font: FontVec,
}

impl std::fmt::Debug for FontFace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FontFace").finish_non_exhaustive()
    }
}

static DEJAVU_SANS: &[u8] = include_bytes!("../assets/fonts/DejaVuSans.ttf");
static DEJAVU_SANS_MONO: &[u8] = include_bytes!("../assets/fonts/DejaVuSansMono.ttf");

/// Font reference prefix resolving to a font compiled into the binary.
pub const BUILTIN_FONT_PREFIX: &str = "builtin:";

impl FontFace {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, ImagingError> {
        let font = FontVec::try_from_vec(bytes).map_err(|e| ImagingError::Font(e.to_string()))?;
        Ok(Self { font })
    }

    pub fn from_path(path: &Path) -> Result<Self, ImagingError> {
        let bytes = std::fs::read(path).map_err(|e| ImagingError::Font(format!("{}: {e}", path.display())))?;
        Self::from_bytes(bytes)
    }

    /// `builtin:sans` and `builtin:mono` name the bundled DejaVu faces.
    pub fn builtin(name: &str) -> Option<Self> {
        let bytes = match name {
            "sans" => DEJAVU_SANS,
            "mono" => DEJAVU_SANS_MONO,
            _ => return None,
        };
        Self::from_bytes(bytes.to_vec()).ok()
    }

    /// Resolves a layout font reference: `builtin:<name>` or a path relative
    /// to `base_dir`.
    pub fn resolve(reference: &str, base_dir: &Path) -> Result<Self, ImagingError> {
        match reference.strip_prefix(BUILTIN_FONT_PREFIX) {
            Some(name) => {
                Self::builtin(name).ok_or_else(|| ImagingError::Font(format!("unknown builtin font {reference}")))
            }
            None => Self::from_path(&base_dir.join(reference)),
        }
    }

    /// Ascent in pixels at `size_px`.
    pub fn ascent(&self, size_px: f32) -> f32 {
        self.font.as_scaled(PxScale::from(size_px)).ascent()
    }

    /// Baseline-to-baseline distance in pixels at `size_px`.
    pub fn line_height(&self, size_px: f32) -> f32 {
        let s = self.font.as_scaled(PxScale::from(size_px));
        s.ascent() - s.descent() + s.line_gap()
    }
}

/// Tight raster of a text run.
#[derive(Debug, Clone)]
pub struct RenderedText {
    pub image: RasterImage,
    /// Distance in pixels from the raster's top row to the baseline.
    pub baseline: i32,
    /// Horizontal offset of the raster's left column from the pen origin.
    pub left: i32,
    /// Characters absent from the font, drawn as '?'.
    pub substituted: Vec<char>,
}

impl RenderedText {
    pub fn into_strict(self) -> Result<RenderedText, ImagingError> {
        if self.substituted.is_empty() {
            Ok(self)
        } else {
            Err(ImagingError::Glyph(self.substituted))
        }
    }
}

/// Anti-aliased single-line text rendering.
pub fn render_text(text: &str, font: &FontFace, size_px: f32, color: Rgba) -> Result<RenderedText, ImagingError> {
    if !(size_px.is_finite() && size_px > 0.0) {
        return Err(ImagingError::Value(format!("font size {size_px}")));
    }
    let scaled = font.font.as_scaled(PxScale::from(size_px));
    let mut substituted = Vec::new();
    let mut glyphs = Vec::new();
    let mut pen = 0.0f32;
    let mut prev: Option<ab_glyph::GlyphId> = None;
    for ch in text.chars() {
        let mut id = scaled.glyph_id(ch);
        if id.0 == 0 && !ch.is_whitespace() {
            substituted.push(ch);
            id = scaled.glyph_id('?');
        }
        if let Some(p) = prev {
            pen += scaled.kern(p, id);
        }
        glyphs.push(id.with_scale_and_position(size_px, ab_glyph::point(pen, 0.0)));
        pen += scaled.h_advance(id);
        prev = Some(id);
    }

    let outlined: Vec<_> = glyphs.into_iter().filter_map(|g| scaled.outline_glyph(g)).collect();
    if outlined.is_empty() {
        return Ok(RenderedText {
            image: RasterImage::filled(1, 1, [0, 0, 0, 0])?,
            baseline: 0,
            left: 0,
            substituted,
        });
    }
    let mut min_x = i32::MAX;
    let mut min_y = i32::MAX;
    let mut max_x = i32::MIN;
    let mut max_y = i32::MIN;
    for g in &outlined {
        let b = g.px_bounds();
        min_x = min_x.min(b.min.x.floor() as i32);
        min_y = min_y.min(b.min.y.floor() as i32);
        max_x = max_x.max(b.max.x.ceil() as i32);
        max_y = max_y.max(b.max.y.ceil() as i32);
    }
    let w = (max_x - min_x).max(1) as u32;
    let h = (max_y - min_y).max(1) as u32;
    let mut coverage = vec![0f32; w as usize * h as usize];
    for g in &outlined {
        let b = g.px_bounds();
        let ox = b.min.x.floor() as i32 - min_x;
        let oy = b.min.y.floor() as i32 - min_y;
        g.draw(|gx, gy, c| {
            let px = ox + gx as i32;
            let py = oy + gy as i32;
            if px >= 0 && py >= 0 && (px as u32) < w && (py as u32) < h {
                let cell = &mut coverage[py as usize * w as usize + px as usize];
                *cell = (*cell + c).min(1.0);
            }
        });
    }
    let mut pixels = Vec::with_capacity(coverage.len() * 4);
    for c in coverage {
        let a = round_u8(color[3] as f64 * c as f64);
        if a == 0 {
            pixels.extend_from_slice(&[0, 0, 0, 0]);
        } else {
            pixels.extend_from_slice(&[color[0], color[1], color[2], a]);
        }
    }
    Ok(RenderedText {
        image: RasterImage::new(w, h, PixelFormat::Rgba8, pixels)?,
        baseline: -min_y,
        left: min_x,
        substituted,
    })
}

/// Procedural stand-in for a card template: a soft diagonal gradient with a
/// header band and border. Used when no template image is supplied.
pub fn placeholder_template(width: u32, height: u32) -> Result<RasterImage, ImagingError> {
    let mut pixels = Vec::with_capacity(width as usize * height as usize * 4);
    let band = (height / 8).max(1);
    for y in 0..height {
        for x in 0..width {
            let t = (x as f64 / width as f64 + y as f64 / height as f64) / 2.0;
            let border = x < 3 || y < 3 || x + 3 >= width || y + 3 >= height;
            let px = if border {
                [120, 130, 150, 255]
            } else if y < band {
                [36, 70, 140, 255]
            } else {
                let wave = ((x as f64 / 17.0).sin() * (y as f64 / 23.0).cos() * 6.0).round();
                let base = 226.0 - 20.0 * t + wave;
                [round_u8(base - 8.0), round_u8(base - 2.0), round_u8(base + 6.0), 255]
            };
            pixels.extend_from_slice(&px);
        }
    }
    RasterImage::new(width, height, PixelFormat::Rgba8, pixels)
}
