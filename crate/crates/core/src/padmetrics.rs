//! ISO/IEC 30107-3 detection metrics over PAD score sets.
//!
//! Polarity: a presentation is classified as an attack iff `score >= threshold`.
//! Rates are computed as `count / class_size`, so independent counting code
//! reproduces them bit-for-bit.
//!
//! As the threshold increases, fewer presentations are called attacks, so
//! APCER is nondecreasing and BPCER nonincreasing along the DET curve.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PadError {
    #[error("no {0} records")]
    EmptyClass(String),
    #[error("score file line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("{0}")]
    Range(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrueClass {
    Bonafide,
    /// Presentation attack instrument species label, e.g. `print`.
    Attack(String),
}

impl TrueClass {
    pub fn parse(label: &str) -> Self {
        let l = label.trim();
        match l.to_ascii_lowercase().as_str() {
            "bonafide" | "bona_fide" | "bona fide" | "bona-fide" => TrueClass::Bonafide,
            _ => TrueClass::Attack(l.to_string()),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            TrueClass::Bonafide => "bonafide",
            TrueClass::Attack(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub id: String,
    pub true_class: TrueClass,
    /// Higher means more attack-like.
    pub score: f64,
}

impl ScoreRecord {
    pub fn new(id: impl Into<String>, true_class: TrueClass, score: f64) -> Self {
        Self {
            id: id.into(),
            true_class,
            score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Res {
    Attack,
    Bonafide,
}

pub fn decide(record: &ScoreRecord, threshold: f64) -> Res {
    if record.score >= threshold {
        Res::Attack
    } else {
        Res::Bonafide
    }
}

/// How per-species APCERs are reduced to one number for DET/EER.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApcerMode {
    /// Maximum over species.
    #[default]
    Worst,
    /// All attack records pooled into one class.
    Pooled,
}

/// Scores grouped by class and sorted, for O(log n) rate queries.
#[derive(Debug, Clone)]
struct SortedScores {
    bonafide: Vec<f64>,
    attacks: BTreeMap<String, Vec<f64>>,
    pooled: Vec<f64>,
}

/// Number of entries `>= t` in an ascending slice.
fn count_at_or_above(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|&s| s < t)
}

/// Number of entries `< t`.
fn count_below(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&s| s < t)
}

impl SortedScores {
    fn new(records: &[ScoreRecord]) -> Self {
        let mut bonafide = Vec::new();
        let mut attacks: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in records {
            match &r.true_class {
                TrueClass::Bonafide => bonafide.push(r.score),
                TrueClass::Attack(l) => attacks.entry(l.clone()).or_default().push(r.score),
            }
        }
        let sort = |v: &mut Vec<f64>| v.sort_by(f64::total_cmp);
        sort(&mut bonafide);
        let mut pooled: Vec<f64> = attacks.values().flatten().copied().collect();
        sort(&mut pooled);
        for v in attacks.values_mut() {
            sort(v);
        }
        Self {
            bonafide,
            attacks,
            pooled,
        }
    }

    fn require_both(&self) -> Result<(), PadError> {
        if self.bonafide.is_empty() {
            return Err(PadError::EmptyClass("bona fide".into()));
        }
        if self.attacks.is_empty() {
            return Err(PadError::EmptyClass("attack".into()));
        }
        Ok(())
    }

    fn bpcer(&self, t: f64) -> f64 {
        count_at_or_above(&self.bonafide, t) as f64 / self.bonafide.len() as f64
    }

    fn apcer(scores: &[f64], t: f64) -> f64 {
        count_below(scores, t) as f64 / scores.len() as f64
    }

    /// Worst-case APCER; ties go to the lexicographically first label.
    fn apcer_worst(&self, t: f64) -> (f64, &str) {
        let mut best: Option<(f64, &str)> = None;
        for (label, scores) in &self.attacks {
            let a = Self::apcer(scores, t);
            if best.is_none_or(|(b, _)| a > b) {
                best = Some((a, label));
            }
        }
        best.expect("at least one species")
    }

    fn apcer_mode(&self, t: f64, mode: ApcerMode) -> f64 {
        match mode {
            ApcerMode::Worst => self.apcer_worst(t).0,
            ApcerMode::Pooled => Self::apcer(&self.pooled, t),
        }
    }

    fn thresholds(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.bonafide.iter().chain(&self.pooled).copied().collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        let mut out = Vec::with_capacity(t.len() + 2);
        out.push(f64::NEG_INFINITY);
        out.extend(t);
        out.push(f64::INFINITY);
        out
    }
}

/// Fraction of `pais` records classified bona fide.
pub fn apcer_pais(records: &[ScoreRecord], pais: &str, threshold: f64) -> Result<f64, PadError> {
    let scores: Vec<f64> = records
        .iter()
        .filter(|r| matches!(&r.true_class, TrueClass::Attack(l) if l == pais))
        .map(|r| r.score)
        .collect();
    if scores.is_empty() {
        return Err(PadError::EmptyClass(pais.to_string()));
    }
    let missed = scores.iter().filter(|&&s| s < threshold).count();
    Ok(missed as f64 / scores.len() as f64)
}

/// APCER with every attack species pooled.
pub fn apcer_pooled(records: &[ScoreRecord], threshold: f64) -> Result<f64, PadError> {
    let s = SortedScores::new(records);
    if s.pooled.is_empty() {
        return Err(PadError::EmptyClass("attack".into()));
    }
    Ok(SortedScores::apcer(&s.pooled, threshold))
}

/// Fraction of bona fide records classified as attacks.
pub fn bpcer(records: &[ScoreRecord], threshold: f64) -> Result<f64, PadError> {
    let s = SortedScores::new(records);
    if s.bonafide.is_empty() {
        return Err(PadError::EmptyClass("bona fide".into()));
    }
    Ok(s.bpcer(threshold))
}

/// Maximum APCER over species present, with its label.
pub fn apcer_worst(records: &[ScoreRecord], threshold: f64) -> Result<(f64, String), PadError> {
    let s = SortedScores::new(records);
    if s.attacks.is_empty() {
        return Err(PadError::EmptyClass("attack".into()));
    }
    let (a, l) = s.apcer_worst(threshold);
    Ok((a, l.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub apcer: f64,
    pub bpcer: f64,
}

/// One point per distinct score plus the `-inf` and `+inf` sentinels, in
/// increasing threshold order. APCER is worst-case over species.
pub fn det_curve(records: &[ScoreRecord]) -> Result<Vec<DetPoint>, PadError> {
    det_curve_with(records, ApcerMode::Worst)
}

pub fn det_curve_with(records: &[ScoreRecord], mode: ApcerMode) -> Result<Vec<DetPoint>, PadError> {
    let s = SortedScores::new(records);
    s.require_both()?;
    Ok(det_points(&s, mode))
}

fn det_points(s: &SortedScores, mode: ApcerMode) -> Vec<DetPoint> {
    s.thresholds()
        .into_iter()
        .map(|t| DetPoint {
            threshold: t,
            apcer: s.apcer_mode(t, mode),
            bpcer: s.bpcer(t),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eer {
    pub rate: f64,
    pub threshold: f64,
}

/// Equal error rate with worst-case APCER.
pub fn eer(records: &[ScoreRecord]) -> Result<Eer, PadError> {
    eer_with(records, ApcerMode::Worst)
}

pub fn eer_with(records: &[ScoreRecord], mode: ApcerMode) -> Result<Eer, PadError> {
    Ok(eer_from_curve(&det_curve_with(records, mode)?))
}

/// Linear interpolation at the sign change of `APCER - BPCER`.
pub fn eer_from_curve(points: &[DetPoint]) -> Eer {
    let diff = |p: &DetPoint| p.apcer - p.bpcer;
    let k = points
        .iter()
        .position(|p| diff(p) >= 0.0)
        .expect("curve ends at APCER 1, BPCER 0");
    let hi = &points[k];
    if diff(hi) == 0.0 || k == 0 {
        return Eer {
            rate: hi.apcer,
            threshold: hi.threshold,
        };
    }
    let lo = &points[k - 1];
    let w = -diff(lo) / (diff(hi) - diff(lo));
    let rate = lo.apcer + w * (hi.apcer - lo.apcer);
    let threshold = match (lo.threshold.is_finite(), hi.threshold.is_finite()) {
        (true, true) => lo.threshold + w * (hi.threshold - lo.threshold),
        (false, _) => hi.threshold,
        (_, false) => lo.threshold,
    };
    Eer { rate, threshold }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub bpcer: f64,
    pub apcer: f64,
    pub threshold: f64,
}

/// Lowest BPCER among thresholds whose worst-case APCER is at most `alpha`.
///
/// `BPCER10`, `BPCER20` and `BPCER100` are this at `alpha` = 0.10, 0.05, 0.01.
pub fn bpcer_at_apcer(records: &[ScoreRecord], alpha: f64) -> Result<OperatingPoint, PadError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(PadError::Range(format!("alpha {alpha} outside (0, 1]")));
    }
    let curve = det_curve(records)?;
    Ok(operating_point(&curve, alpha))
}

fn operating_point(curve: &[DetPoint], alpha: f64) -> OperatingPoint {
    // APCER is nondecreasing in threshold: take the last admissible point.
    let p = curve
        .iter()
        .rev()
        .find(|p| p.apcer <= alpha)
        .expect("the -inf sentinel has APCER 0");
    OperatingPoint {
        bpcer: p.bpcer,
        apcer: p.apcer,
        threshold: p.threshold,
    }
}

mod threshold_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("bad threshold {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadReport {
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
    pub apcer_mode: ApcerMode,
    pub n_bonafide: usize,
    pub n_attack: BTreeMap<String, usize>,
    pub apcer_by_pais: BTreeMap<String, f64>,
    pub apcer_worst: f64,
    pub apcer_worst_pais: String,
    pub apcer_pooled: f64,
    pub bpcer: f64,
    pub eer: f64,
    #[serde(with = "threshold_serde")]
    pub eer_threshold: f64,
    pub bpcer10: f64,
    pub bpcer20: f64,
    pub bpcer100: f64,
}

impl PadReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let fractions = [
            ("apcer_worst", self.apcer_worst),
            ("apcer_pooled", self.apcer_pooled),
            ("bpcer", self.bpcer),
            ("eer", self.eer),
            ("bpcer10", self.bpcer10),
            ("bpcer20", self.bpcer20),
            ("bpcer100", self.bpcer100),
        ];
        for (name, x) in fractions {
            if !unit(x) {
                v.push(format!("{name} = {x} outside [0, 1]"));
            }
        }
        for (k, &x) in &self.apcer_by_pais {
            if !unit(x) {
                v.push(format!("apcer[{k}] = {x} outside [0, 1]"));
            }
        }
        let max = self.apcer_by_pais.values().copied().fold(f64::NEG_INFINITY, f64::max);
        if max != self.apcer_worst {
            v.push(format!("apcer_worst {} != max per-species {max}", self.apcer_worst));
        }
        v
    }
}

/// Full report at `threshold`, or at the EER threshold when `None`.
pub fn pad_report(records: &[ScoreRecord], threshold: Option<f64>, mode: ApcerMode) -> Result<PadReport, PadError> {
    let s = SortedScores::new(records);
    s.require_both()?;
    let eer = eer_from_curve(&det_points(&s, mode));
    let worst_curve = det_points(&s, ApcerMode::Worst);
    let t = threshold.unwrap_or(eer.threshold);
    let (apcer_worst, worst_label) = s.apcer_worst(t);
    Ok(PadReport {
        threshold: t,
        apcer_mode: mode,
        n_bonafide: s.bonafide.len(),
        n_attack: s.attacks.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
        apcer_by_pais: s
            .attacks
            .iter()
            .map(|(k, v)| (k.clone(), SortedScores::apcer(v, t)))
            .collect(),
        apcer_worst,
        apcer_worst_pais: worst_label.to_string(),
        apcer_pooled: SortedScores::apcer(&s.pooled, t),
        bpcer: s.bpcer(t),
        eer: eer.rate,
        eer_threshold: eer.threshold,
        bpcer10: operating_point(&worst_curve, 0.10).bpcer,
        bpcer20: operating_point(&worst_curve, 0.05).bpcer,
        bpcer100: operating_point(&worst_curve, 0.01).bpcer,
    })
}

/// Reads `id,true_class,score` with a header row. `invert` negates scores
/// for systems where higher means bona fide.
pub fn read_scores(reader: impl Read, invert: bool) -> Result<Vec<ScoreRecord>, PadError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| PadError::Parse {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let expected = ["id", "true_class", "score"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(PadError::Parse {
            line: 1,
            reason: format!("header must be id,true_class,score, got {:?}", headers),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| PadError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let score: f64 = rec[2].parse().map_err(|_| PadError::Parse {
            line,
            reason: format!("score {:?} is not a number", &rec[2]),
        })?;
        if !score.is_finite() {
            return Err(PadError::Parse {
                line,
                reason: format!("score {score} is not finite"),
            });
        }
        if rec[1].is_empty() {
            return Err(PadError::Parse {
                line,
                reason: "empty true_class".into(),
            });
        }
        out.push(ScoreRecord::new(
            &rec[0],
            TrueClass::parse(&rec[1]),
            if invert { -score } else { score },
        ));
    }
    Ok(out)
}

/// At most 9 significant digits; infinities as `inf` / `-inf`.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if a == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn write_det_csv(points: &[DetPoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "threshold,apcer,bpcer")?;
    for p in points {
        writeln!(
            w,
            "{},{},{}",
            format_sig9(p.threshold),
            format_sig9(p.apcer),
            format_sig9(p.bpcer)
        )?;
    }
    Ok(())
}

/// DET plot with normal-deviate axes (APCER horizontal, BPCER vertical).
pub fn det_svg(points: &[DetPoint]) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 60.0;
    const LO: f64 = 0.001;
    const HI: f64 = 0.6;
    let n = Normal::standard();
    let z = |p: f64| n.inverse_cdf(p.clamp(LO, HI));
    let (zlo, zhi) = (z(LO), z(HI));
    let map = |p: f64| (z(p) - zlo) / (zhi - zlo) * SIZE;
    let px = |a: f64| MARGIN + map(a);
    let py = |b: f64| MARGIN + SIZE - map(b);

    let mut svg = String::new();
    let total = SIZE + 2.0 * MARGIN;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for tick in [0.001, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4] {
        let label = format_sig9(tick * 100.0);
        let (x, y) = (px(tick), py(tick));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{label}</text>"##,
            MARGIN + SIZE,
            MARGIN + SIZE + 14.0
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{label}</text>"##,
            MARGIN + SIZE,
            MARGIN - 4.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">APCER (%)</text>"#,
        MARGIN + SIZE / 2.0,
        total - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">BPCER (%)</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    let coords: Vec<String> = points
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.apcer), py(p.bpcer)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline fill="none" stroke="#c0392b" stroke-width="1.5" points="{}"/>"##,
        coords.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}
