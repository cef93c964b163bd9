//! Synthetic identities: names, dates, RUN with its mod-11 check digit, the
//! TD1 machine-readable zone, and generator prompts.

use std::collections::BTreeMap;

use chrono::{Datelike, Months, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mix_seed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PersonaError {
    #[error("RUN {0} outside 1..=99999999")]
    Range(u64),
    #[error("check digit {given} does not match {expected} for RUN {number}")]
    Mismatch { number: u32, given: char, expected: char },
    #[error("character {0:?} outside the MRZ alphabet")]
    Alphabet(char),
    #[error("name {0:?} has no MRZ-encodable characters")]
    Encoding(String),
    #[error("unknown field key {0:?}")]
    UnknownField(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub fn code(self) -> char {
        match self {
            Gender::F => 'F',
            Gender::M => 'M',
        }
    }

    fn word(self) -> &'static str {
        match self {
            Gender::F => "female",
            Gender::M => "male",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Citizen,
    Extranjero,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "citizen" => Ok(Profile::Citizen),
            "extranjero" => Ok(Profile::Extranjero),
            other => Err(format!("unknown profile {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub surnames: String,
    pub given_names: String,
    pub nationality: String,
    pub gender: Gender,
    pub birth_date: NaiveDate,
    pub document_number: String,
    pub issue_date: NaiveDate,
    pub expiry_date: NaiveDate,
    pub run_number: u32,
    pub run_check: char,
}

/// Every field key a layout may bind to a persona.
pub const FIELD_KEYS: &[&str] = &[
    "surnames",
    "given_names",
    "nationality",
    "gender",
    "birth_date",
    "document_number",
    "issue_date",
    "expiry_date",
    "run",
    "mrz",
];

const MONTHS_ES: [&str; 12] = [
    "ENE", "FEB", "MAR", "ABR", "MAY", "JUN", "JUL", "AGO", "SEP", "OCT", "NOV", "DIC",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DateFormat {
    /// `05 ENE 1990`
    #[default]
    DayMonthYearEs,
    /// `1990-01-05`
    Iso,
}

impl DateFormat {
    pub fn format(self, d: NaiveDate) -> String {
        match self {
            DateFormat::DayMonthYearEs => format!("{:02} {} {}", d.day(), MONTHS_ES[d.month0() as usize], d.year()),
            DateFormat::Iso => d.format("%Y-%m-%d").to_string(),
        }
    }
}

fn full_years(from: NaiveDate, to: NaiveDate) -> i32 {
    let mut years = to.year() - from.year();
    if (to.month(), to.day()) < (from.month(), from.day()) {
        years -= 1;
    }
    years
}

fn group_thousands(digits: &str) -> String {
    let bytes = digits.as_bytes();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, &b) in bytes.iter().enumerate() {
        if i > 0 && (bytes.len() - i).is_multiple_of(3) {
            out.push('.');
        }
        out.push(b as char);
    }
    out
}

impl Persona {
    /// Invariant violations; empty when the persona is consistent.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.birth_date < self.issue_date && self.issue_date < self.expiry_date) {
            v.push("dates not ordered birth < issue < expiry".to_string());
        }
        let age = full_years(self.birth_date, self.issue_date);
        if !(0..=120).contains(&age) {
            v.push(format!("age at issue {age} outside [0, 120]"));
        }
        match run_check_digit(self.run_number) {
            Ok(c) if c == self.run_check => {}
            _ => v.push("run_check does not match run_number".to_string()),
        }
        let name_ok = |s: &str| {
            s.chars()
                .all(|c| c.is_ascii_uppercase() || matches!(c, ' ' | 'Ñ' | '-'))
        };
        if !name_ok(&self.surnames) || !name_ok(&self.given_names) {
            v.push("name outside the A-Z, space, Ñ, hyphen alphabet".to_string());
        }
        if self.document_number.is_empty() || !self.document_number.bytes().all(|b| b.is_ascii_digit()) {
            v.push("document_number is not a digit string".to_string());
        }
        v
    }

    pub fn run_display(&self) -> String {
        format_run(self.run_number, self.run_check).expect("persona RUN is consistent")
    }

    /// Text rendered for `key` on the card.
    pub fn display_field(&self, key: &str) -> Result<String, PersonaError> {
        self.display_field_with(key, DateFormat::default())
    }

    pub fn display_field_with(&self, key: &str, dates: DateFormat) -> Result<String, PersonaError> {
        Ok(match key {
            "surnames" => self.surnames.clone(),
            "given_names" => self.given_names.clone(),
            "nationality" => self.nationality.clone(),
            "gender" => self.gender.code().to_string(),
            "birth_date" => dates.format(self.birth_date),
            "document_number" => group_thousands(&self.document_number),
            "issue_date" => dates.format(self.issue_date),
            "expiry_date" => dates.format(self.expiry_date),
            "run" => self.run_display(),
            "mrz" => mrz_td1(self)?.lines.join("\n"),
            other => return Err(PersonaError::UnknownField(other.to_string())),
        })
    }

    /// JSON sidecar: ISO-8601 dates plus the display strings for every field.
    pub fn sidecar(&self) -> Result<serde_json::Value, PersonaError> {
        let mut display = BTreeMap::new();
        for key in FIELD_KEYS {
            display.insert(*key, self.display_field(key)?);
        }
        let mut v = serde_json::to_value(self).expect("persona serializes");
        v["display"] = serde_json::to_value(display).expect("map serializes");
        Ok(v)
    }
}

/// Chilean RUN check digit: digits weighted 2..7 cyclically from the right,
/// `11 - sum mod 11`, with 11 -> '0' and 10 -> 'K'.
pub fn run_check_digit(number: u32) -> Result<char, PersonaError> {
    if !(1..=99_999_999).contains(&number) {
        return Err(PersonaError::Range(number as u64));
    }
    let mut n = number;
    let mut sum = 0u32;
    let mut weight = 2;
    while n > 0 {
        sum += (n % 10) * weight;
        n /= 10;
        weight = if weight == 7 { 2 } else { weight + 1 };
    }
    Ok(match 11 - sum % 11 {
        11 => '0',
        10 => 'K',
        d => char::from_digit(d, 10).expect("single digit"),
    })
}

/// `12.345.678-5` style rendering; the check digit must match.
pub fn format_run(number: u32, check: char) -> Result<String, PersonaError> {
    let expected = run_check_digit(number)?;
    if check.to_ascii_uppercase() != expected {
        return Err(PersonaError::Mismatch {
            number,
            given: check,
            expected,
        });
    }
    Ok(format!("{}-{expected}", group_thousands(&number.to_string())))
}

fn mrz_value(c: char) -> Result<u32, PersonaError> {
    match c {
        '0'..='9' => Ok(c as u32 - '0' as u32),
        'A'..='Z' => Ok(c as u32 - 'A' as u32 + 10),
        '<' => Ok(0),
        other => Err(PersonaError::Alphabet(other)),
    }
}

/// ICAO 9303 check digit: weights 7, 3, 1 repeating, sum mod 10.
pub fn mrz_check_digit(field: &str) -> Result<char, PersonaError> {
    let mut sum = 0u32;
    for (c, w) in field.chars().zip([7u32, 3, 1].iter().cycle()) {
        sum += mrz_value(c)? * w;
    }
    Ok(char::from_digit(sum % 10, 10).expect("single digit"))
}

pub const MRZ_LINE_LEN: usize = 30;

/// Three 30-character TD1 lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrzBlock {
    pub lines: [String; 3],
}

impl MrzBlock {
    fn check_fields(&self) -> [(&str, char); 4] {
        let l1 = self.lines[0].as_str();
        let l2 = self.lines[1].as_str();
        let at = |s: &str, i: usize| s.as_bytes()[i] as char;
        [
            (&l1[5..14], at(l1, 14)),
            (&l2[0..6], at(l2, 6)),
            (&l2[8..14], at(l2, 14)),
            ("", at(l2, 29)),
        ]
    }

    fn composite_source(&self) -> String {
        let l1 = &self.lines[0];
        let l2 = &self.lines[1];
        format!("{}{}{}{}", &l1[5..30], &l2[0..7], &l2[8..15], &l2[18..29])
    }

    /// Re-derives every embedded check digit.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (i, line) in self.lines.iter().enumerate() {
            if line.len() != MRZ_LINE_LEN {
                v.push(format!("line {} has length {}", i + 1, line.len()));
            }
            if let Some(c) = line.chars().find(|&c| mrz_value(c).is_err()) {
                v.push(format!("line {} has invalid character {c:?}", i + 1));
            }
        }
        if !v.is_empty() {
            return v;
        }
        let names = ["document number", "birth date", "expiry date"];
        for (name, (field, stored)) in names.iter().zip(self.check_fields()) {
            if mrz_check_digit(field).ok() != Some(stored) {
                v.push(format!("{name} check digit mismatch"));
            }
        }
        let composite = self.check_fields()[3].1;
        if mrz_check_digit(&self.composite_source()).ok() != Some(composite) {
            v.push("composite check digit mismatch".into());
        }
        v
    }
}

fn pad(s: &str, len: usize) -> String {
    let mut out: String = s.chars().take(len).collect();
    while out.len() < len {
        out.push('<');
    }
    out
}

fn mrz_name_part(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            'A'..='Z' => out.push(c),
            'a'..='z' => out.push(c.to_ascii_uppercase()),
            'Ñ' | 'ñ' => out.push('N'),
            ' ' | '-' if !out.is_empty() && !out.ends_with('<') => {
                out.push('<');
            }
            _ => {}
        }
    }
    out.trim_end_matches('<').to_string()
}

fn mrz_date(d: NaiveDate) -> String {
    format!("{:02}{:02}{:02}", d.year().rem_euclid(100), d.month(), d.day())
}

/// TD1 machine-readable zone for the persona.
pub fn mrz_td1(p: &Persona) -> Result<MrzBlock, PersonaError> {
    let surname = mrz_name_part(&p.surnames);
    if surname.is_empty() {
        return Err(PersonaError::Encoding(p.surnames.clone()));
    }
    let given = mrz_name_part(&p.given_names);
    if given.is_empty() {
        return Err(PersonaError::Encoding(p.given_names.clone()));
    }
    let doc = pad(&p.document_number, 9);
    let optional1 = pad(&format!("{}<{}", p.run_number, p.run_check), 15);
    let line1 = format!("INCHL{doc}{}{optional1}", mrz_check_digit(&doc)?);

    let birth = mrz_date(p.birth_date);
    let expiry = mrz_date(p.expiry_date);
    let nat = nationality_code(&p.nationality);
    let head = format!(
        "{birth}{}{}{expiry}{}{nat}{}",
        mrz_check_digit(&birth)?,
        p.gender.code(),
        mrz_check_digit(&expiry)?,
        pad("", 11)
    );
    let mut block = MrzBlock {
        lines: [line1, head, pad(&format!("{surname}<<{given}"), MRZ_LINE_LEN)],
    };
    let composite = mrz_check_digit(&block.composite_source())?;
    block.lines[1].push(composite);
    Ok(block)
}

const SURNAMES: &[&str] = &[
    "GONZALEZ",
    "MUÑOZ",
    "ROJAS",
    "DIAZ",
    "PEREZ",
    "SOTO",
    "CONTRERAS",
    "SILVA",
    "MARTINEZ",
    "SEPULVEDA",
    "MORALES",
    "RODRIGUEZ",
    "LOPEZ",
    "FUENTES",
    "HERNANDEZ",
    "TORRES",
    "ARAYA",
    "FLORES",
    "ESPINOZA",
    "VALENZUELA",
    "CASTILLO",
    "TAPIA",
    "REYES",
    "GUTIERREZ",
    "CASTRO",
    "PIZARRO",
    "ALVAREZ",
    "VASQUEZ",
    "SANCHEZ",
    "FERNANDEZ",
    "RAMIREZ",
    "CARRASCO",
    "GOMEZ",
    "CORTES",
    "HERRERA",
    "NUÑEZ",
    "JARA",
    "VERGARA",
    "RIVERA",
    "FIGUEROA",
    "RIQUELME",
    "GARCIA",
    "MIRANDA",
    "BRAVO",
    "VERA",
    "MOLINA",
    "VEGA",
    "CAMPOS",
    "SANDOVAL",
    "OLIVARES",
    "ORELLANA",
    "ZUÑIGA",
    "GALLARDO",
    "ORTIZ",
    "SAAVEDRA",
    "NAVARRO",
    "AGUILERA",
    "ALARCON",
    "PARRA",
    "PEÑA",
    "SALAZAR",
    "ROMERO",
    "CACERES",
    "MENDEZ",
    "PALMA",
    "INOSTROZA",
    "PEREZ-COTAPOS",
];

const GIVEN_F: &[&str] = &[
    "MARIA",
    "JOSEFA",
    "ISIDORA",
    "FLORENCIA",
    "CATALINA",
    "CONSTANZA",
    "FERNANDA",
    "JAVIERA",
    "VALENTINA",
    "ANTONELLA",
    "MARTINA",
    "SOFIA",
    "TRINIDAD",
    "AGUSTINA",
    "CAROLINA",
    "PAULA",
    "DANIELA",
    "CAMILA",
    "FRANCISCA",
    "MACARENA",
    "ANA",
    "LUISA",
    "ROSA",
    "PATRICIA",
    "XIMENA",
    "BEATRIZ",
    "ELENA",
    "PILAR",
    "SOLEDAD",
    "VIOLETA",
];

const GIVEN_M: &[&str] = &[
    "JUAN",
    "JOSE",
    "LUIS",
    "CARLOS",
    "JORGE",
    "MANUEL",
    "FRANCISCO",
    "PEDRO",
    "DIEGO",
    "SEBASTIAN",
    "MATIAS",
    "BENJAMIN",
    "VICENTE",
    "TOMAS",
    "AGUSTIN",
    "MAXIMILIANO",
    "CRISTOBAL",
    "IGNACIO",
    "FELIPE",
    "RODRIGO",
    "PABLO",
    "ANDRES",
    "ALEJANDRO",
    "MIGUEL",
    "GONZALO",
    "ESTEBAN",
    "RAUL",
    "HECTOR",
    "MARCELO",
    "NICOLAS",
];

/// Display nationality with its ICAO three-letter code.
const NATIONALITIES: &[(&str, &str)] = &[
    ("CHILENA", "CHL"),
    ("PERUANA", "PER"),
    ("COLOMBIANA", "COL"),
    ("VENEZOLANA", "VEN"),
    ("BOLIVIANA", "BOL"),
    ("ARGENTINA", "ARG"),
    ("HAITIANA", "HTI"),
    ("ECUATORIANA", "ECU"),
    ("CHINA", "CHN"),
    ("ESPAÑOLA", "ESP"),
    ("BRASILEÑA", "BRA"),
    ("DOMINICANA", "DOM"),
    ("CUBANA", "CUB"),
    ("PARAGUAYA", "PRY"),
    ("URUGUAYA", "URY"),
];

/// Three-letter code for a display nationality; `XXX` when unlisted.
pub fn nationality_code(nationality: &str) -> &'static str {
    NATIONALITIES
        .iter()
        .find(|(n, _)| *n == nationality)
        .map_or("XXX", |(_, c)| c)
}

pub const RUN_MIN: u32 = 4_000_000;
pub const RUN_MAX: u32 = 28_000_000;

fn profile_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, salt))
}

fn random_date(rng: &mut impl Rng, from: NaiveDate, to: NaiveDate) -> NaiveDate {
    let span = (to - from).num_days();
    from + chrono::Duration::days(rng.gen_range(0..=span))
}

/// Deterministic synthetic identity for `(seed, profile)`.
pub fn generate_persona(seed: u64, profile: Profile) -> Persona {
    let mut rng = profile_rng(seed, profile as u64 + 1);
    let gender = if rng.gen_bool(0.5) { Gender::F } else { Gender::M };
    let pool = match gender {
        Gender::F => GIVEN_F,
        Gender::M => GIVEN_M,
    };
    let n_given = rng.gen_range(1..=2);
    let given: Vec<&str> = pool.choose_multiple(&mut rng, n_given).copied().collect();
    let surnames: Vec<&str> = (0..2)
        .map(|_| *SURNAMES.choose(&mut rng).expect("non-empty pool"))
        .collect();
    let nationality = match profile {
        Profile::Citizen => NATIONALITIES[0].0,
        Profile::Extranjero => NATIONALITIES[1..].choose(&mut rng).expect("non-empty").0,
    };

    let issue_date = random_date(
        &mut rng,
        NaiveDate::from_ymd_opt(2013, 1, 1).expect("valid"),
        NaiveDate::from_ymd_opt(2025, 6, 30).expect("valid"),
    );
    let age: u32 = rng.gen_range(18..=80);
    let latest_birth = issue_date - Months::new(12 * age);
    let birth_date = latest_birth - chrono::Duration::days(rng.gen_range(0..365));
    let validity = match profile {
        Profile::Citizen => 10,
        Profile::Extranjero => 5,
    };
    let expiry_date = issue_date + Months::new(12 * validity);

    let document_number = rng.gen_range(100_000_000u32..=999_999_999).to_string();
    let run_number = rng.gen_range(RUN_MIN..=RUN_MAX);
    let run_check = run_check_digit(run_number).expect("RUN in range");
    Persona {
        surnames: surnames.join(" "),
        given_names: given.join(" "),
        nationality: nationality.to_string(),
        gender,
        birth_date,
        document_number,
        issue_date,
        expiry_date,
        run_number,
        run_check,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceAttributes {
    pub age_years: u8,
    pub ethnicity: String,
    pub gender: Gender,
    pub hair_color: String,
    pub hair_or_beard_style: String,
    /// Fills the `wearing ...` phrase; `dress` in the stock template.
    pub clothing: String,
}

impl FaceAttributes {
    pub fn is_valid(&self) -> bool {
        (18..=99).contains(&self.age_years)
    }
}

pub const DEFAULT_CLOTHING: &str = "dress";

pub const NEGATIVE_FACE_PROMPT: &str = "(deformed iris, deformed pupils, semi-realistic, CGI, 3D, render, sketch, cartoon, drawing, anime:1.4), text, close-up, cropped, out of frame, worst quality, low quality, jpeg artifacts, ugly, duplicate, morbid, mutilated, extra fingers, mutated hands, poorly drawn hands, poorly drawn face, mutation, deformed, blurry, dehydrated, bad anatomy, bad proportions, extra limbs, cloned face, disfigured, gross proportions, malformed limbs, missing arms, missing legs, extra arms, extra legs, fused fingers, too many fingers, long neck, hair in front of the eyes, hat, (shadows), (three-quarter pose), (face in profile:1.1), teeth, full body, side view.";

/// `(positive, negative)` prompt pair for an ID-style face portrait.
pub fn build_face_prompt(a: &FaceAttributes) -> (String, String) {
    let positive = format!(
        "RAW front photo, face portrait photo of ({} years old:1.1), {} ({}:1.1), {} hair, ({}:1.1), \
         neutral expression, wearing {}, (white background:1.4), head horizontally aligned, \
         (uniform lighting:1.4), top of the hair visible, photo for ID.",
        a.age_years,
        a.ethnicity,
        a.gender.word(),
        a.hair_color,
        a.hair_or_beard_style,
        a.clothing
    );
    (positive, NEGATIVE_FACE_PROMPT.to_string())
}

/// One-line card description: surnames, names, nationality, gender, birth
/// date, document number, issuance, expiration, RUN.
pub fn build_card_prompt(p: &Persona) -> String {
    let f = |k| p.display_field(k).expect("known key");
    format!(
        "Chile ID card with surnames {}, names {}, nationality {}, gender {}, date of birth {}, \
         document number {}, issuance date {}, expiration date {}, RUN {}",
        p.surnames,
        p.given_names,
        p.nationality,
        f("gender"),
        f("birth_date"),
        f("document_number"),
        f("issue_date"),
        f("expiry_date"),
        p.run_display()
    )
}

const ETHNICITIES: &[&str] = &[
    "Chilean",
    "Latin American",
    "Hispanic",
    "Mestizo",
    "Andean",
    "European",
    "Afro-Latino",
    "East Asian",
];
const HAIR_COLORS: &[&str] = &["black", "dark brown", "brown", "light brown", "blonde", "gray", "red"];
const STYLES_F: &[&str] = &[
    "short haircut",
    "long straight hair tied back",
    "bob haircut",
    "hair in a bun",
];
const STYLES_M: &[&str] = &["short haircut", "short beard", "clean shaven, short hair", "buzz cut"];
const CLOTHING: &[&str] = &[DEFAULT_CLOTHING, "black suits", "white shirt", "dark sweater"];

/// Seeded attribute tuple for face prompt generation.
pub fn generate_face_attributes(seed: u64) -> FaceAttributes {
    let mut rng = profile_rng(seed, 0xFACE);
    let gender = if rng.gen_bool(0.5) { Gender::F } else { Gender::M };
    let pick = |rng: &mut ChaCha8Rng, pool: &[&str]| pool.choose(rng).expect("non-empty").to_string();
    let age_years = rng.gen_range(18..=99);
    let ethnicity = pick(&mut rng, ETHNICITIES);
    let hair_color = pick(&mut rng, HAIR_COLORS);
    let hair_or_beard_style = pick(&mut rng, if gender == Gender::F { STYLES_F } else { STYLES_M });
    let clothing = pick(&mut rng, CLOTHING);
    FaceAttributes {
        age_years,
        ethnicity,
        gender,
        hair_color,
        hair_or_beard_style,
        clothing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent check-digit oracle: enumerates the candidate digit and
    /// accepts the one whose full weighted sum is divisible by 11.
    fn run_oracle(number: u32) -> char {
        let digits: Vec<u32> = number.to_string().bytes().map(|b| (b - b'0') as u32).collect();
        let weights = [2u32, 3, 4, 5, 6, 7];
        let body: u32 = digits.iter().rev().enumerate().map(|(i, d)| d * weights[i % 6]).sum();
        for (value, ch) in (0..=9)
            .map(|d| (d, char::from_digit(d, 10).unwrap()))
            .chain([(10, 'K')])
        {
            if (body + value).is_multiple_of(11) {
                return ch;
            }
        }
        unreachable!()
    }

    #[test]
    fn run_check_examples() {
        assert_eq!(run_check_digit(12_345_678), Ok('5'));
        assert_eq!(run_check_digit(11_111_111), Ok('1'));
        assert_eq!(run_check_digit(1), Ok('9'));
        assert_eq!(run_check_digit(0), Err(PersonaError::Range(0)));
        assert_eq!(run_check_digit(100_000_000), Err(PersonaError::Range(100_000_000)));
    }

    #[test]
    fn run_check_matches_oracle() {
        for n in 1..=10_000 {
            assert_eq!(run_check_digit(n).unwrap(), run_oracle(n), "n={n}");
        }
    }

    #[test]
    fn run_formatting() {
        assert_eq!(format_run(12_345_678, '5').unwrap(), "12.345.678-5");
        assert_eq!(format_run(1, run_oracle(1)).unwrap(), "1-9");
        assert!(matches!(
            format_run(12_345_678, '4'),
            Err(PersonaError::Mismatch { .. })
        ));
        let k = (1..).find(|&n| run_oracle(n) == 'K').unwrap();
        assert!(format_run(k, 'k').unwrap().ends_with("-K"));
    }

    #[test]
    fn mrz_digit_examples() {
        assert_eq!(mrz_check_digit("520727"), Ok('3'));
        assert_eq!(mrz_check_digit("<<<<<<"), Ok('0'));
        assert_eq!(mrz_check_digit("A"), Ok('0'));
        assert_eq!(mrz_check_digit("ab"), Err(PersonaError::Alphabet('a')));
    }

    #[test]
    fn mrz_block_layout() {
        let p = generate_persona(7, Profile::Citizen);
        let m = mrz_td1(&p).unwrap();
        assert!(m.lines.iter().all(|l| l.len() == 30));
        assert!(m.lines[0].starts_with("INCHL"));
        assert_eq!(&m.lines[1][15..18], "CHL");
        assert!(m.violations().is_empty(), "{:?}", m.violations());
    }

    #[test]
    fn mrz_tamper_detected() {
        let m = mrz_td1(&generate_persona(3, Profile::Extranjero)).unwrap();
        let mut bad = m.clone();
        let mut l = bad.lines[1].clone().into_bytes();
        l[0] = if l[0] == b'9' { b'8' } else { b'9' };
        bad.lines[1] = String::from_utf8(l).unwrap();
        assert!(!bad.violations().is_empty());
    }

    #[test]
    fn long_surname_is_truncated() {
        let mut p = generate_persona(11, Profile::Citizen);
        p.surnames = "A".repeat(40);
        let m = mrz_td1(&p).unwrap();
        assert_eq!(m.lines[2], "A".repeat(30));
        assert!(m.violations().is_empty());
    }

    #[test]
    fn unencodable_name_is_an_error() {
        let mut p = generate_persona(11, Profile::Citizen);
        p.surnames = " - ".into();
        assert!(matches!(mrz_td1(&p), Err(PersonaError::Encoding(_))));
    }

    #[test]
    fn mrz_name_transliteration() {
        assert_eq!(mrz_name_part("MUÑOZ PEREZ-COTAPOS"), "MUNOZ<PEREZ<COTAPOS");
    }

    #[test]
    fn personas_are_deterministic_and_valid() {
        for profile in [Profile::Citizen, Profile::Extranjero] {
            assert_eq!(generate_persona(42, profile), generate_persona(42, profile));
            for seed in 0..1000 {
                let p = generate_persona(seed, profile);
                assert!(p.violations().is_empty(), "{seed}: {:?}", p.violations());
                assert!((RUN_MIN..=RUN_MAX).contains(&p.run_number));
                match profile {
                    Profile::Citizen => assert_eq!(p.nationality, "CHILENA"),
                    Profile::Extranjero => assert_ne!(p.nationality, "CHILENA"),
                }
            }
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_personas() {
        let differing = (0..1000u64)
            .filter(|&s| generate_persona(s, Profile::Citizen) != generate_persona(s + 1000, Profile::Citizen))
            .count();
        assert!(differing > 990, "{differing}");
    }

    #[test]
    fn display_fields() {
        let p = Persona {
            surnames: "PEREZ SOTO".into(),
            given_names: "ANA".into(),
            nationality: "CHILENA".into(),
            gender: Gender::F,
            birth_date: NaiveDate::from_ymd_opt(1990, 1, 5).unwrap(),
            document_number: "123456789".into(),
            issue_date: NaiveDate::from_ymd_opt(2020, 8, 17).unwrap(),
            expiry_date: NaiveDate::from_ymd_opt(2030, 8, 17).unwrap(),
            run_number: 12_345_678,
            run_check: '5',
        };
        assert!(p.violations().is_empty());
        assert_eq!(p.display_field("birth_date").unwrap(), "05 ENE 1990");
        assert_eq!(p.display_field("issue_date").unwrap(), "17 AGO 2020");
        assert_eq!(
            p.display_field_with("issue_date", DateFormat::Iso).unwrap(),
            "2020-08-17"
        );
        assert_eq!(p.display_field("document_number").unwrap(), "123.456.789");
        assert_eq!(p.display_field("run").unwrap(), "12.345.678-5");
        assert!(p.display_field("cli").is_err());
        let side = p.sidecar().unwrap();
        assert_eq!(side["birth_date"], "1990-01-05");
        assert_eq!(side["display"]["run"], "12.345.678-5");

        let prompt = build_card_prompt(&p);
        assert_eq!(
            prompt,
            "Chile ID card with surnames PEREZ SOTO, names ANA, nationality CHILENA, gender F, \
             date of birth 05 ENE 1990, document number 123.456.789, issuance date 17 AGO 2020, \
             expiration date 17 AGO 2030, RUN 12.345.678-5"
        );
    }

    #[test]
    fn card_prompt_field_order() {
        let p = generate_persona(5, Profile::Extranjero);
        let s = build_card_prompt(&p);
        let labels = [
            "Chile ID card with surnames ",
            ", names ",
            ", nationality ",
            ", gender ",
            ", date of birth ",
            ", document number ",
            ", issuance date ",
            ", expiration date ",
            ", RUN ",
        ];
        let mut at = 0;
        for l in labels {
            let i = s[at..].find(l).unwrap_or_else(|| panic!("{l} missing in {s}"));
            at += i + l.len();
        }
        assert!(s.ends_with(&p.run_display()));
    }

    #[test]
    fn face_prompt_is_pure() {
        let a = generate_face_attributes(9);
        assert!(a.is_valid());
        assert_eq!(build_face_prompt(&a), build_face_prompt(&a.clone()));
        let (_, neg) = build_face_prompt(&a);
        assert!(neg.contains("teeth") && neg.contains("(face in profile:1.1)"));
    }
}
