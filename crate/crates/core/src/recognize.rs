//! Stroke identification vectors, the character template database, and
//! matching of sub-words against it.

use crate::primitive::{Primitive, PrimitiveCode};
use crate::segment::{BBox, DotCluster, Placement};
use crate::skeleton::ClosedCurve;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Form {
    Separate,
    First,
    Middle,
    End,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::Separate, Form::First, Form::Middle, Form::End];

    pub fn name(self) -> &'static str {
        match self {
            Form::Separate => "separate",
            Form::First => "first",
            Form::Middle => "middle",
            Form::End => "end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 32 letters of the Persian alphabet. The seven that never join to
/// the following letter take only separate and end forms.
pub const ALPHABET: [(char, bool); 32] = [
    ('ا', false),
    ('ب', true),
    ('پ', true),
    ('ت', true),
    ('ث', true),
    ('ج', true),
    ('چ', true),
    ('ح', true),
    ('خ', true),
    ('د', false),
    ('ذ', false),
    ('ر', false),
    ('ز', false),
    ('ژ', false),
    ('س', true),
    ('ش', true),
    ('ص', true),
    ('ض', true),
    ('ط', true),
    ('ظ', true),
    ('ع', true),
    ('غ', true),
    ('ف', true),
    ('ق', true),
    ('ک', true),
    ('گ', true),
    ('ل', true),
    ('م', true),
    ('ن', true),
    ('و', false),
    ('ه', true),
    ('ی', true),
];

/// Forms a letter can take, or `None` for characters outside the alphabet.
pub fn forms_of(letter: char) -> Option<&'static [Form]> {
    const JOINING: [Form; 4] = Form::ALL;
    const NON_JOINING: [Form; 2] = [Form::Separate, Form::End];
    ALPHABET
        .iter()
        .find(|(c, _)| *c == letter)
        .map(|&(_, joins)| if joins { &JOINING[..] } else { &NON_JOINING[..] })
}

/// Character template: a letter form as a primitive sequence plus dots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Civ {
    pub letter: char,
    pub form: Form,
    pub primitives: Vec<PrimitiveCode>,
    pub dots_above: u8,
    pub dots_below: u8,
    pub position: i8,
}

impl Civ {
    pub fn codes(&self) -> String {
        self.primitives
            .iter()
            .map(|c| c.letter().to_string())
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.letter,
            self.form,
            self.codes(),
            self.dots_above,
            self.dots_below,
            self.position
        )
    }

    fn signature(&self) -> (&[PrimitiveCode], u8, u8, i8) {
        (&self.primitives, self.dots_above, self.dots_below, self.position)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CivError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("database lacks {} letter form(s), first {}:{}", .0.len(), .0[0].0, .0[0].1)]
    Coverage(Vec<(char, Form)>),
    #[error("records on lines {first} and {second} share a signature but name different letters")]
    Ambiguity { first: usize, second: usize },
    #[error("line {line} repeats letter, form and primitives of line {previous}")]
    Duplicate { line: usize, previous: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CivDatabase {
    pub records: Vec<Civ>,
    by_sequence: HashMap<Vec<PrimitiveCode>, Vec<usize>>,
    max_len: usize,
}

impl CivDatabase {
    /// Builds a database without the coverage requirement (used for
    /// hand-made fixtures); duplicate and ambiguity checks still apply.
    pub fn from_records(records: Vec<Civ>) -> Result<Self, CivError> {
        let mut seen_sig: HashMap<(&[PrimitiveCode], u8, u8, i8), usize> = HashMap::new();
        let mut seen_key: HashMap<(char, Form, &[PrimitiveCode]), usize> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if let Some(&p) = seen_key.get(&(r.letter, r.form, &r.primitives[..])) {
                return Err(CivError::Duplicate {
                    line: i + 1,
                    previous: p + 1,
                });
            }
            seen_key.insert((r.letter, r.form, &r.primitives), i);
            match seen_sig.get(&r.signature()) {
                Some(&p) if records[p].letter != r.letter => {
                    return Err(CivError::Ambiguity {
                        first: p + 1,
                        second: i + 1,
                    })
                }
                Some(_) => {}
                None => {
                    seen_sig.insert(r.signature(), i);
                }
            }
        }
        let mut by_sequence: HashMap<Vec<PrimitiveCode>, Vec<usize>> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            by_sequence.entry(r.primitives.clone()).or_default().push(i);
        }
        let max_len = records.iter().map(|r| r.primitives.len()).max().unwrap_or(0);
        Ok(Self {
            records,
            by_sequence,
            max_len,
        })
    }

    /// Indices of records whose primitive sequence is exactly `seq`.
    pub fn with_sequence(&self, seq: &[PrimitiveCode]) -> &[usize] {
        self.by_sequence.get(seq).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn find(&self, letter: char, form: Form) -> Option<&Civ> {
        self.records
            .iter()
            .find(|r| r.letter == letter && r.form == form)
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<Civ, CivError> {
    let err = |column: usize, message: String| CivError::Parse {
        line: lineno,
        column,
        message,
    };
    let fields: Vec<&str> = line.split(',').collect();
    let mut columns = Vec::with_capacity(fields.len());
    let mut col = 1;
    for f in &fields {
        columns.push(col);
        col += f.chars().count() + 1;
    }
    if fields.len() != 6 {
        return Err(err(1, format!("expected 6 fields, found {}", fields.len())));
    }
    let mut chars = fields[0].chars();
    let letter = match (chars.next(), chars.next()) {
        (Some(c), None) => c,
        _ => return Err(err(columns[0], format!("letter must be one character, got {:?}", fields[0]))),
    };
    let allowed = forms_of(letter).ok_or_else(|| err(columns[0], format!("{letter:?} is not a supported letter")))?;
    let form = Form::parse(fields[1]).ok_or_else(|| err(columns[1], format!("unknown form {:?}", fields[1])))?;
    if !allowed.contains(&form) {
        return Err(err(columns[1], format!("{letter} has no {form} form")));
    }
    let mut primitives = Vec::new();
    let mut pcol = columns[2];
    for code in fields[2].split('|') {
        let p = PrimitiveCode::parse(code).map_err(|e| err(pcol, e.to_string()))?;
        primitives.push(p);
        pcol += code.chars().count() + 1;
    }
    if primitives.len() > 4 {
        return Err(err(columns[2], format!("{} primitives, at most 4 allowed", primitives.len())));
    }
    let dots = |i: usize| -> Result<u8, CivError> {
        match fields[i] {
            "0" => Ok(0),
            "1" => Ok(1),
            "2" => Ok(2),
            "3" => Ok(3),
            other => Err(err(columns[i], format!("dot count must be 0-3, got {other:?}"))),
        }
    };
    let dots_above = dots(3)?;
    let dots_below = dots(4)?;
    let position = match fields[5] {
        "-1" => -1,
        "0" => 0,
        "1" => 1,
        other => return Err(err(columns[5], format!("position must be -1, 0 or 1, got {other:?}"))),
    };
    Ok(Civ {
        letter,
        form,
        primitives,
        dots_above,
        dots_below,
        position,
    })
}

/// Parses and validates a CIV file: every letter form of the alphabet must
/// be present and no signature may name two letters.
pub fn load_civ_db(bytes: &[u8]) -> Result<CivDatabase, CivError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        CivError::Parse {
            line,
            column: 1,
            message: "invalid UTF-8".into(),
        }
    })?;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        records.push(parse_line(line, i + 1)?);
        lines.push(i + 1);
    }
    let missing: Vec<(char, Form)> = ALPHABET
        .iter()
        .flat_map(|&(c, _)| forms_of(c).unwrap().iter().map(move |&f| (c, f)))
        .filter(|&(c, f)| !records.iter().any(|r| r.letter == c && r.form == f))
        .collect();
    if !missing.is_empty() {
        return Err(CivError::Coverage(missing));
    }
    CivDatabase::from_records(records).map_err(|e| match e {
        CivError::Ambiguity { first, second } => CivError::Ambiguity {
            first: lines[first - 1],
            second: lines[second - 1],
        },
        CivError::Duplicate { line, previous } => CivError::Duplicate {
            line: lines[line - 1],
            previous: lines[previous - 1],
        },
        other => other,
    })
}

/// One primitive of an SIV with the columns it covers and the dots
/// attributed to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SivPart {
    pub code: PrimitiveCode,
    pub cols: (usize, usize),
    pub dots_above: u8,
    pub dots_below: u8,
}

/// Stroke identification vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Siv {
    pub parts: Vec<SivPart>,
    pub dots_above: u8,
    pub dots_below: u8,
    /// Leftmost column.
    pub h_start: usize,
    /// Rightmost column.
    pub h_end: usize,
    /// -1 below the baseline, 0 touching it, +1 above.
    pub v_position: i8,
    /// Mean column of the stroke pixels, the right-to-left sort key.
    pub center_col: f64,
}

impl Siv {
    pub fn primitives(&self) -> Vec<PrimitiveCode> {
        self.parts.iter().map(|p| p.code).collect()
    }
}

/// What a sub-word's skeleton produced: primitives per stroke and the
/// closed curves removed before stroke extraction.
#[derive(Debug, Clone, Default)]
pub struct SubWordShapes {
    pub strokes: Vec<Vec<Primitive>>,
    pub curves: Vec<ClosedCurve>,
}

/// Row range, column range and mean column of a pixel set.
type Span = ((usize, usize), (usize, usize), f64);

fn span<'a>(pixels: impl Iterator<Item = &'a (usize, usize)>) -> Option<Span> {
    let mut rows = (usize::MAX, 0);
    let mut cols = (usize::MAX, 0);
    let mut sum = 0.0;
    let mut n = 0usize;
    for &(r, c) in pixels {
        rows = (rows.0.min(r), rows.1.max(r));
        cols = (cols.0.min(c), cols.1.max(c));
        sum += c as f64;
        n += 1;
    }
    (n > 0).then(|| (rows, cols, sum / n as f64))
}

/// One SIV per stroke and per closed curve, ordered right to left by mean
/// column. Each dot cluster goes to the primitive whose column range holds
/// its centroid (nearest centre when several do, nearest range when none
/// does; exact ties favour the right-hand primitive).
pub fn build_sivs(shapes: &SubWordShapes, dots: &[DotCluster], baseline: usize, pen: f64) -> Vec<Siv> {
    let mut sivs: Vec<(Siv, (usize, usize))> = Vec::new();
    let mut push = |parts: Vec<SivPart>, rows: (usize, usize), cols: (usize, usize), center: f64| {
        sivs.push((
            Siv {
                parts,
                dots_above: 0,
                dots_below: 0,
                h_start: cols.0,
                h_end: cols.1,
                v_position: 0,
                center_col: center,
            },
            rows,
        ));
    };
    for stroke in &shapes.strokes {
        let Some((rows, cols, center)) = span(stroke.iter().flat_map(|p| p.pixels.iter())) else {
            continue;
        };
        let parts = stroke
            .iter()
            .map(|p| SivPart {
                code: p.code,
                cols: p.col_range(),
                dots_above: 0,
                dots_below: 0,
            })
            .collect();
        push(parts, rows, cols, center);
    }
    for curve in &shapes.curves {
        let Some((rows, cols, center)) = span(curve.pixels.iter()) else {
            continue;
        };
        let part = SivPart {
            code: PrimitiveCode::O,
            cols,
            dots_above: 0,
            dots_below: 0,
        };
        push(vec![part], rows, cols, center);
    }
    sivs.sort_by(|a, b| {
        b.0.center_col
            .total_cmp(&a.0.center_col)
            .then(a.1 .0.cmp(&b.1 .0))
    });
    let half = pen / 2.0;
    let base = baseline as f64;
    for (siv, rows) in &mut sivs {
        siv.v_position = if (rows.0 as f64) <= base + half && (rows.1 as f64) >= base - half {
            0
        } else if (rows.0 + rows.1) as f64 / 2.0 < base {
            1
        } else {
            -1
        };
    }

    for dot in dots {
        let col = dot.centroid.1;
        let mut best: Option<((bool, f64), usize, usize)> = None;
        for (si, (siv, _)) in sivs.iter().enumerate() {
            for (pi, part) in siv.parts.iter().enumerate() {
                let (lo, hi) = (part.cols.0 as f64, part.cols.1 as f64);
                let inside = lo <= col && col <= hi;
                let dist = if inside {
                    (col - (lo + hi) / 2.0).abs()
                } else {
                    (lo - col).max(col - hi)
                };
                let key = (!inside, dist);
                let better = best.as_ref().is_none_or(|(k, ..)| {
                    (!key.0 & k.0) || (key.0 == k.0 && key.1 < k.1 - 1e-9)
                });
                if better {
                    best = Some((key, si, pi));
                }
            }
        }
        if let Some((_, si, pi)) = best {
            let part = &mut sivs[si].0.parts[pi];
            match dot.placement {
                Placement::Above => part.dots_above = part.dots_above.saturating_add(dot.count),
                Placement::Below => part.dots_below = part.dots_below.saturating_add(dot.count),
            }
        }
    }
    sivs.into_iter()
        .map(|(mut siv, _)| {
            siv.dots_above = siv.parts.iter().map(|p| p.dots_above).sum();
            siv.dots_below = siv.parts.iter().map(|p| p.dots_below).sum();
            siv
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognizedLetter {
    pub letter: char,
    pub form: Form,
    /// False when the sub-word also had unmatched strokes.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecognizedSubWord {
    /// Letters in reading order (rightmost first).
    pub letters: Vec<RecognizedLetter>,
    /// SIVs dropped because no template matched at either end.
    pub unmatched: usize,
    /// Primitives discarded together with those SIVs.
    pub dropped_primitives: usize,
    /// Page-coordinate bounding box of the sub-word, when known.
    pub bbox: Option<BBox>,
}

impl RecognizedSubWord {
    pub fn text(&self) -> String {
        self.letters.iter().map(|l| l.letter).collect()
    }
}

struct Item {
    code: PrimitiveCode,
    above: u8,
    below: u8,
    siv: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum End {
    Right,
    Left,
}

fn position_ok(want: i8, positions: &[i8]) -> bool {
    if want == 0 {
        positions.contains(&0) || positions.windows(2).any(|w| w[0] != w[1])
    } else {
        positions.iter().all(|&p| p == want)
    }
}

fn form_rank(form: Form, end: End, first_from_end: bool, last: bool) -> u8 {
    let preferred: &[Form] = match (end, first_from_end, last) {
        (_, true, true) => &[Form::Separate],
        (End::Right, true, false) => &[Form::First, Form::Separate],
        (End::Left, true, false) => &[Form::End, Form::Separate],
        (_, false, true) => &[Form::End, Form::First, Form::Separate],
        (_, false, false) => &[Form::Middle],
    };
    preferred
        .iter()
        .position(|&f| f == form)
        .map_or(u8::MAX, |p| p as u8)
}

/// Greedy template matching from both ends of the primitive stream.
pub fn match_subword(sivs: &[Siv], db: &CivDatabase) -> RecognizedSubWord {
    let items: Vec<Item> = sivs
        .iter()
        .enumerate()
        .flat_map(|(si, s)| {
            s.parts.iter().map(move |p| Item {
                code: p.code,
                above: p.dots_above,
                below: p.dots_below,
                siv: si,
            })
        })
        .collect();
    let codes: Vec<PrimitiveCode> = items.iter().map(|i| i.code).collect();
    let (mut lo, mut hi) = (0usize, items.len());
    let mut right: Vec<Civ> = Vec::new();
    let mut left: Vec<Civ> = Vec::new();
    let mut unmatched = 0;
    let mut dropped = 0;

    // A connector H at a letter boundary is drawn once but may belong to both
    // neighbours; when the plain window fails, the next one on that end may
    // start on it again.
    let attempt = |lo: usize, hi: usize, end: End, first_from_end: bool, share: bool| -> Option<(usize, usize)> {
        let avail = hi - lo + share as usize;
        for len in (1 + share as usize..=db.max_len().min(avail)).rev() {
            let window = match (end, share) {
                (End::Right, false) => lo..lo + len,
                (End::Right, true) => lo - 1..lo - 1 + len,
                (End::Left, false) => hi - len..hi,
                (End::Left, true) => hi + 1 - len..hi + 1,
            };
            let fresh = match (end, share) {
                (End::Right, true) => window.start + 1..window.end,
                (End::Left, true) => window.start..window.end - 1,
                _ => window.clone(),
            };
            let last = len == avail;
            let above: u8 = items[fresh.clone()].iter().map(|i| i.above).sum();
            let below: u8 = items[fresh].iter().map(|i| i.below).sum();
            let mut positions: Vec<i8> = items[window.clone()]
                .iter()
                .map(|i| sivs[i.siv].v_position)
                .collect();
            positions.dedup();
            let best = db
                .with_sequence(&codes[window])
                .iter()
                .copied()
                .filter(|&r| {
                    let c = &db.records[r];
                    c.dots_above == above && c.dots_below == below && position_ok(c.position, &positions)
                })
                .min_by_key(|&r| (form_rank(db.records[r].form, end, first_from_end, last), r));
            if let Some(r) = best {
                return Some((r, len - share as usize));
            }
        }
        None
    };
    let joins = |civ: Option<&Civ>, end: End| {
        civ.is_some_and(|c| match end {
            End::Right => c.primitives.last() == Some(&PrimitiveCode::H),
            End::Left => c.primitives.first() == Some(&PrimitiveCode::H),
        })
    };

    while lo < hi {
        let mut found = None;
        for (end, share) in [(End::Right, false), (End::Right, true), (End::Left, false), (End::Left, true)] {
            let (done, prev) = match end {
                End::Right => (&right, right.last()),
                End::Left => (&left, left.last()),
            };
            if share && !joins(prev, end) {
                continue;
            }
            if let Some(m) = attempt(lo, hi, end, done.is_empty(), share) {
                found = Some((end, m));
                break;
            }
        }
        match found {
            Some((End::Right, (r, len))) => {
                right.push(db.records[r].clone());
                lo += len;
            }
            Some((End::Left, (r, len))) => {
                left.push(db.records[r].clone());
                hi -= len;
            }
            None => {
                let siv = items[lo].siv;
                let mut end = lo;
                while end < hi && items[end].siv == siv {
                    end += 1;
                }
                dropped += end - lo;
                unmatched += 1;
                lo = end;
            }
        }
    }
    let exact = unmatched == 0;
    let letters = right
        .into_iter()
        .chain(left.into_iter().rev())
        .map(|c| RecognizedLetter {
            letter: c.letter,
            form: c.form,
            exact,
        })
        .collect();
    RecognizedSubWord {
        letters,
        unmatched,
        dropped_primitives: dropped,
        bbox: None,
    }
}

/// Joins recognized rows into text. Sub-words whose horizontal gap exceeds
/// `factor` times the reference gap are separated by a space; the reference
/// is the median gap on the page, or `fallback_gap` when the page has fewer
/// than three gaps.
pub fn assemble_text(rows: &[Vec<RecognizedSubWord>], factor: f64, fallback_gap: f64) -> String {
    let gap = |a: &RecognizedSubWord, b: &RecognizedSubWord| -> Option<f64> {
        let (ra, rb) = (a.bbox?, b.bbox?);
        Some(ra.left as f64 - rb.right as f64 - 1.0)
    };
    let mut gaps: Vec<f64> = rows
        .iter()
        .flat_map(|row| row.windows(2).filter_map(|w| gap(&w[0], &w[1])))
        .collect();
    gaps.sort_by(f64::total_cmp);
    let reference = if gaps.len() < 3 {
        fallback_gap
    } else if gaps.len() % 2 == 1 {
        gaps[gaps.len() / 2]
    } else {
        (gaps[gaps.len() / 2 - 1] + gaps[gaps.len() / 2]) / 2.0
    };
    rows.iter()
        .map(|row| {
            let mut line = String::new();
            for (i, sw) in row.iter().enumerate() {
                if i > 0 && gap(&row[i - 1], sw).is_some_and(|g| g > factor * reference) {
                    line.push(' ');
                }
                line.push_str(&sw.text());
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}
