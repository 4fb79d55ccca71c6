//! Synthetic page rendering from character templates, ground truth
//! sidecars, and scoring of recognition output.
//!
//! Every primitive is drawn as a chain of unit steps entered from the right
//! and left at its left end, so a letter is its primitives laid out right to
//! left with each one starting where the previous one stopped.

use crate::primitive::{classify, LineSegment, PrimitiveCode, QuantAngle};
use crate::raster::{BinaryImage, GrayImage};
use crate::recognize::{Civ, CivDatabase, Form, RecognizedSubWord};
use crate::segment::BBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("no template for {0}:{1}")]
    UnknownLetter(char, Form),
    #[error("render spec line {line}: {message}")]
    SpecParse { line: usize, message: String },
    #[error("truth line {line}: {message}")]
    TruthParse { line: usize, message: String },
    #[error("invalid render spec: {0}")]
    InvalidSpec(&'static str),
}

/// Nominal primitive size in pixels at scale 1.
pub const UNIT: f64 = 8.0;

type Dir = (f64, f64);
const WEST: Dir = (-1.0, 0.0);
const EAST: Dir = (1.0, 0.0);
const NORTH: Dir = (0.0, -1.0);
const SOUTH: Dir = (0.0, 1.0);
const SOUTH_WEST: Dir = (-1.0, 1.0);
const NORTH_WEST: Dir = (-1.0, -1.0);

/// One way of drawing a primitive: unit steps in image coordinates
/// (x right, y down), or a ring entered at its east point and left at the
/// point facing the given direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Path(&'static [Dir]),
    Ring(Dir),
}

/// Drawing variants per code, canonical first. L is a corner in any of the
/// four orientations that the classifier still reads as a corner; C opens
/// to the right and U opens upward.
pub fn variants(code: PrimitiveCode) -> &'static [Variant] {
    use PrimitiveCode::*;
    match code {
        H => &[Variant::Path(&[WEST])],
        V => &[Variant::Path(&[SOUTH]), Variant::Path(&[NORTH])],
        S => &[Variant::Path(&[SOUTH_WEST])],
        B => &[Variant::Path(&[NORTH_WEST])],
        L => &[
            Variant::Path(&[WEST, NORTH]),
            Variant::Path(&[SOUTH, WEST]),
            Variant::Path(&[NORTH, WEST]),
            Variant::Path(&[WEST, SOUTH]),
        ],
        U => &[Variant::Path(&[SOUTH, WEST, NORTH])],
        C => &[Variant::Path(&[WEST, SOUTH, EAST])],
        O => &[Variant::Ring(WEST), Variant::Ring(SOUTH), Variant::Ring(NORTH)],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    Seg { from: Dir, to: Dir, dir: Dir },
    Ring { center: Dir, exit: Dir },
}

/// Lays out the chain in unit coordinates. Returns the pieces and, per
/// primitive, the range of pieces it produced.
fn trace(choice: &[Variant]) -> (Vec<Piece>, Vec<std::ops::Range<usize>>) {
    let mut p = (0.0, 0.0);
    let mut pieces = Vec::new();
    let mut spans = Vec::new();
    for v in choice {
        let start = pieces.len();
        match v {
            Variant::Ring(exit) => {
                let center = (p.0 - 0.5, p.1);
                pieces.push(Piece::Ring { center, exit: *exit });
                p = (center.0 + 0.5 * exit.0, center.1 + 0.5 * exit.1);
            }
            Variant::Path(steps) => {
                for &d in steps.iter() {
                    let q = (p.0 + d.0, p.1 + d.1);
                    pieces.push(Piece::Seg { from: p, to: q, dir: d });
                    p = q;
                }
            }
        }
        spans.push(start..pieces.len());
    }
    (pieces, spans)
}

fn point_seg_dist(p: Dir, a: Dir, b: Dir) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((a.0 + t * dx - p.0).powi(2) + (a.1 + t * dy - p.1).powi(2)).sqrt()
}

fn seg_seg_dist(a: Dir, b: Dir, c: Dir, d: Dir) -> f64 {
    point_seg_dist(a, c, d)
        .min(point_seg_dist(b, c, d))
        .min(point_seg_dist(c, a, b))
        .min(point_seg_dist(d, a, b))
}

/// Inside the rectangle around segment `ab` that extends `radius` past both
/// ends (a square-capped pen stroke).
fn in_capped_segment(p: Dir, a: Dir, b: Dir, radius: f64) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return (p.0 - a.0).abs() <= radius && (p.1 - a.1).abs() <= radius;
    }
    let (ux, uy) = (dx / len, dy / len);
    let (px, py) = (p.0 - a.0, p.1 - a.1);
    let along = px * ux + py * uy;
    let across = (px * uy - py * ux).abs();
    across <= radius && along >= -radius && along <= len + radius
}

fn dot(a: Dir, b: Dir) -> f64 {
    (a.0 * b.0 + a.1 * b.1) / ((a.0 * a.0 + a.1 * a.1) * (b.0 * b.0 + b.1 * b.1)).sqrt()
}

/// Consecutive steps must turn by at most a right angle, steps touching a
/// ring must meet it head-on, and pieces that are not neighbours in the
/// chain must keep clear of each other.
fn legal(pieces: &[Piece]) -> bool {
    // cos 45°, with slack for rounding
    const RADIAL: f64 = 0.7;
    for w in pieces.windows(2) {
        match (w[0], w[1]) {
            (Piece::Seg { dir: a, .. }, Piece::Seg { dir: b, .. }) => {
                if a == b || dot(a, b) < -1e-9 {
                    return false;
                }
            }
            (Piece::Seg { dir, .. }, Piece::Ring { .. }) => {
                if dot(dir, WEST) < RADIAL {
                    return false;
                }
            }
            (Piece::Ring { exit, .. }, Piece::Seg { dir, .. }) => {
                if dot(dir, exit) < RADIAL {
                    return false;
                }
            }
            (Piece::Ring { exit, .. }, Piece::Ring { .. }) => {
                if exit != WEST {
                    return false;
                }
            }
        }
    }
    for i in 0..pieces.len() {
        for j in i + 2..pieces.len() {
            let clear = match (pieces[i], pieces[j]) {
                (Piece::Seg { from: a, to: b, .. }, Piece::Seg { from: c, to: d, .. }) => {
                    seg_seg_dist(a, b, c, d) >= 0.45
                }
                (Piece::Ring { center: a, .. }, Piece::Ring { center: b, .. }) => {
                    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() >= 1.45
                }
                (Piece::Ring { center, .. }, Piece::Seg { from, to, .. })
                | (Piece::Seg { from, to, .. }, Piece::Ring { center, .. }) => {
                    point_seg_dist(center, from, to) >= 0.95
                }
            };
            if !clear {
                return false;
            }
        }
    }
    true
}

/// Codes the classifier assigns to the ideal geometry of a chain.
fn ideal_codes(pieces: &[Piece]) -> Vec<PrimitiveCode> {
    let to_px = |p: Dir| {
        (
            (1000.0 + p.1 * 8.0).round() as usize,
            (1000.0 + p.0 * 8.0).round() as usize,
        )
    };
    let mut out = Vec::new();
    let mut stroke: Vec<LineSegment> = Vec::new();
    let flush = |stroke: &mut Vec<LineSegment>, out: &mut Vec<PrimitiveCode>| {
        out.extend(classify(stroke, false));
        stroke.clear();
    };
    for p in pieces {
        match *p {
            Piece::Seg { from, to, dir } => stroke.push(LineSegment {
                angle: QuantAngle::of_direction(dir.0, -dir.1),
                offset: 0,
                start: to_px(from),
                end: to_px(to),
                support: 8,
                range: 0..1,
            }),
            Piece::Ring { .. } => {
                flush(&mut stroke, &mut out);
                out.push(PrimitiveCode::O);
            }
        }
    }
    flush(&mut stroke, &mut out);
    out
}

/// First variant assignment (canonical variants tried first) whose chain is
/// legal and reads back as `codes`.
pub fn choose_variants(codes: &[PrimitiveCode]) -> Option<Vec<Variant>> {
    fn search(codes: &[PrimitiveCode], chosen: &mut Vec<Variant>) -> bool {
        if chosen.len() == codes.len() {
            let (pieces, _) = trace(chosen);
            return legal(&pieces) && ideal_codes(&pieces) == codes;
        }
        for &v in variants(codes[chosen.len()]) {
            chosen.push(v);
            if legal(&trace(chosen).0) && search(codes, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    let mut chosen = Vec::new();
    search(codes, &mut chosen).then_some(chosen)
}

fn layout_of(civ: &Civ) -> Vec<Variant> {
    choose_variants(&civ.primitives)
        .unwrap_or_else(|| civ.primitives.iter().map(|&c| variants(c)[0]).collect())
}

/// A rendered sub-word on its own canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct SubWordRender {
    pub image: BinaryImage,
    /// Row of maximal body ink (lowest on ties).
    pub baseline: usize,
    pub letters: Vec<(char, Form)>,
    /// Dot clusters drawn: count, above?, and the covering box.
    pub dots: Vec<(u8, bool, BBox)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pen {
    pub stroke_width: usize,
    pub scale: f64,
}

impl Pen {
    fn unit(&self) -> f64 {
        UNIT * self.scale
    }
}

fn ink_box(pieces: &[Piece], unit: f64, radius: f64) -> (f64, f64, f64, f64) {
    let mut b = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    let mut add = |x: f64, y: f64, r: f64| {
        b.0 = b.0.min(y - r);
        b.1 = b.1.min(x - r);
        b.2 = b.2.max(y + r);
        b.3 = b.3.max(x + r);
    };
    for p in pieces {
        match *p {
            Piece::Seg { from, to, .. } => {
                add(from.0 * unit, from.1 * unit, radius);
                add(to.0 * unit, to.1 * unit, radius);
            }
            Piece::Ring { center, .. } => add(center.0 * unit, center.1 * unit, unit / 2.0 + radius),
        }
    }
    b
}

fn draw_dots(img: &mut BinaryImage, count: u8, above: bool, center_col: f64, edge_row: isize, size: usize) -> BBox {
    let size = size as isize;
    let c0 = center_col.round() as isize;
    // squares as (row offset, col offset) of their top-left corners, in
    // units of `size`, with row 0 nearest the body
    let cells: Vec<(isize, isize)> = match count {
        1 => vec![(0, -size / 2)],
        2 => vec![(0, -size), (0, 0)],
        _ => vec![(0, -size), (0, 0), (1, -size / 2)],
    };
    let mut bbox = BBox {
        top: usize::MAX,
        left: usize::MAX,
        bottom: 0,
        right: 0,
    };
    for (k, dc) in cells {
        let top = if above {
            edge_row - (k + 1) * size + 1
        } else {
            edge_row + k * size
        };
        for r in top..top + size {
            for c in c0 + dc..c0 + dc + size {
                if r >= 0 && c >= 0 && (r as usize) < img.height() && (c as usize) < img.width() {
                    img.set(r as usize, c as usize, true);
                    bbox.top = bbox.top.min(r as usize);
                    bbox.left = bbox.left.min(c as usize);
                    bbox.bottom = bbox.bottom.max(r as usize);
                    bbox.right = bbox.right.max(c as usize);
                }
            }
        }
    }
    bbox
}

/// Renders letters joined into one sub-word.
pub fn render_subword(civs: &[&Civ], pen: Pen) -> SubWordRender {
    let unit = pen.unit();
    let radius = pen.stroke_width as f64 / 2.0;
    let mut choice = Vec::new();
    let mut owner = Vec::new();
    for (i, civ) in civs.iter().enumerate() {
        let layout = layout_of(civ);
        owner.extend(std::iter::repeat_n(i, layout.len()));
        choice.extend(layout);
    }
    let (pieces, spans) = trace(&choice);
    let dot_size = pen.stroke_width + 1;
    let dot_room = (3 * dot_size + 2 * pen.stroke_width) as f64;
    let b = ink_box(&pieces, unit, radius);
    let margin = dot_room + 2.0;
    let off_x = margin - b.1.floor();
    let off_y = margin - b.0.floor();
    let width = (b.3 - b.1 + 2.0 * margin).ceil() as usize + 1;
    let height = (b.2 - b.0 + 2.0 * margin).ceil() as usize + 1;
    let mut img = BinaryImage::new(width, height);
    let to_px = |p: Dir| ((p.0 * unit).round() + off_x, (p.1 * unit).round() + off_y);
    for piece in &pieces {
        let (x0, y0, x1, y1, ring) = match *piece {
            Piece::Seg { from, to, .. } => {
                let (a, b) = (to_px(from), to_px(to));
                (a.0.min(b.0), a.1.min(b.1), a.0.max(b.0), a.1.max(b.1), None)
            }
            Piece::Ring { center, .. } => {
                let c = to_px(center);
                let r = unit / 2.0;
                (c.0 - r, c.1 - r, c.0 + r, c.1 + r, Some((c, r)))
            }
        };
        let r0 = (y0 - radius - 1.0).floor().max(0.0) as usize;
        let r1 = ((y1 + radius + 1.0).ceil() as usize).min(height - 1);
        let c0 = (x0 - radius - 1.0).floor().max(0.0) as usize;
        let c1 = ((x1 + radius + 1.0).ceil() as usize).min(width - 1);
        for r in r0..=r1 {
            for c in c0..=c1 {
                let p = (c as f64, r as f64);
                let hit = match (piece, ring) {
                    (Piece::Seg { from, to, .. }, _) => {
                        in_capped_segment(p, to_px(*from), to_px(*to), radius)
                    }
                    (_, Some((center, rr))) => {
                        let d = ((p.0 - center.0).powi(2) + (p.1 - center.1).powi(2)).sqrt();
                        (d - rr).abs() <= radius
                    }
                    _ => false,
                };
                if hit {
                    img.set(r, c, true);
                }
            }
        }
    }
    let baseline = crate::segment::detect_baseline(&img, 0, height - 1).unwrap_or(0);

    let body = img.clone();
    let mut dots = Vec::new();
    for (i, civ) in civs.iter().enumerate() {
        let letter_pieces: Vec<Piece> = spans
            .iter()
            .zip(&owner)
            .filter(|(_, &o)| o == i)
            .flat_map(|(s, _)| pieces[s.clone()].iter().copied())
            .collect();
        let lb = ink_box(&letter_pieces, unit, radius);
        let center = (lb.1 + lb.3) / 2.0 + off_x;
        let half = dot_size as f64;
        let lo = ((center - half - 1.0).floor().max(0.0)) as usize;
        let hi = ((center + half + 1.0).ceil() as usize).min(width - 1);
        let body = &body;
        let column_ink = |top: bool| -> Option<usize> {
            let rows: Vec<usize> = (lo..=hi)
                .flat_map(|c| (0..height).filter(move |&r| body.get(r, c)))
                .collect();
            if top {
                rows.into_iter().min()
            } else {
                rows.into_iter().max()
            }
        };
        let gap = pen.stroke_width as isize + 1;
        if civ.dots_above > 0 {
            let edge = column_ink(true).unwrap_or(baseline).min(baseline) as isize - gap;
            let bb = draw_dots(&mut img, civ.dots_above, true, center, edge, dot_size);
            dots.push((civ.dots_above, true, bb));
        }
        if civ.dots_below > 0 {
            let edge = column_ink(false).unwrap_or(baseline).max(baseline) as isize + gap;
            let bb = draw_dots(&mut img, civ.dots_below, false, center, edge, dot_size);
            dots.push((civ.dots_below, false, bb));
        }
    }
    SubWordRender {
        image: img,
        baseline,
        letters: civs.iter().map(|c| (c.letter, c.form)).collect(),
        dots,
    }
}

pub fn render_letter(civ: &Civ, pen: Pen) -> SubWordRender {
    render_subword(&[civ], pen)
}

/// Letter forms of one sub-word in reading order.
pub type SubWordSpec = Vec<(char, Form)>;
/// Words of one row, each a list of sub-words.
pub type RowSpec = Vec<Vec<SubWordSpec>>;

/// A page to render, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub rows: Vec<RowSpec>,
    pub stroke_width: usize,
    pub scale: f64,
    pub noise_p: f64,
    pub ramp: bool,
    pub seed: u64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            rows: Vec::new(),
            stroke_width: 3,
            scale: 1.0,
            noise_p: 0.0,
            ramp: false,
            seed: 1,
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.stroke_width < 1 {
            return Err(HarnessError::InvalidSpec("stroke_width must be at least 1"));
        }
        if !(0.0..0.5).contains(&self.noise_p) {
            return Err(HarnessError::InvalidSpec("noise_p must be in [0, 0.5)"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(HarnessError::InvalidSpec("scale must be positive"));
        }
        Ok(())
    }

    /// Parses the line-oriented spec format: `key = value` settings and
    /// `row` lines whose whitespace-separated words hold `+`-joined
    /// sub-words of comma-joined `letter[:form]` entries. A letter without
    /// a form takes the one implied by its place in the sub-word.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut spec = RenderSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: String| HarnessError::SpecParse { line: i + 1, message };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("row") {
                if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                    return Err(err(format!("unknown directive {line:?}")));
                }
                let mut row = Vec::new();
                for word in rest.split_whitespace() {
                    let mut subwords = Vec::new();
                    for sw in word.split('+') {
                        let entries: Vec<&str> = sw.split(',').collect();
                        let n = entries.len();
                        let mut letters = Vec::new();
                        for (k, e) in entries.iter().enumerate() {
                            let (l, f) = match e.split_once(':') {
                                Some((l, f)) => (l, Some(f)),
                                None => (*e, None),
                            };
                            let mut chars = l.chars();
                            let letter = match (chars.next(), chars.next()) {
                                (Some(c), None) => c,
                                _ => return Err(err(format!("bad letter {l:?}"))),
                            };
                            let form = match f {
                                Some(f) => Form::parse(f).ok_or_else(|| err(format!("unknown form {f:?}")))?,
                                None => implied_form(k, n),
                            };
                            letters.push((letter, form));
                        }
                        subwords.push(letters);
                    }
                    row.push(subwords);
                }
                spec.rows.push(row);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let bad = |what: &str| err(format!("bad {what} value {value:?}"));
            match key {
                "stroke_width" => spec.stroke_width = value.parse().map_err(|_| bad(key))?,
                "scale" => spec.scale = value.parse().map_err(|_| bad(key))?,
                "noise_p" => spec.noise_p = value.parse().map_err(|_| bad(key))?,
                "ramp" => spec.ramp = value.parse().map_err(|_| bad(key))?,
                "seed" => spec.seed = value.parse().map_err(|_| bad(key))?,
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Form of the `k`-th of `n` letters in a sub-word.
pub fn implied_form(k: usize, n: usize) -> Form {
    match (k, n) {
        (_, 1) => Form::Separate,
        (0, _) => Form::First,
        (k, n) if k + 1 == n => Form::End,
        _ => Form::Middle,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSubWord {
    pub bbox: BBox,
    pub letters: Vec<(char, Form)>,
    /// Dot clusters as (count, above).
    pub dots: Vec<(u8, bool)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub baseline: usize,
    pub subwords: Vec<TruthSubWord>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub rows: Vec<TruthRow>,
}

impl GroundTruth {
    /// Sidecar text; dot inventories are not part of the file.
    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.rows.iter().enumerate() {
            let _ = writeln!(out, "row {i} baseline {}", row.baseline);
            for (j, sw) in row.subwords.iter().enumerate() {
                let b = sw.bbox;
                let letters: Vec<String> = sw.letters.iter().map(|(c, f)| format!("{c}:{f}")).collect();
                let _ = writeln!(
                    out,
                    "subword {i}.{j} box {},{},{},{} letters {}",
                    b.top,
                    b.left,
                    b.bottom,
                    b.right,
                    letters.join(",")
                );
            }
        }
        out
    }

    pub fn from_sidecar(text: &str) -> Result<Self, HarnessError> {
        let mut rows: Vec<TruthRow> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let err = |m: &str| HarnessError::TruthParse {
                line: n + 1,
                message: m.to_string(),
            };
            let toks: Vec<&str> = line.split(' ').collect();
            match toks.as_slice() {
                [] | [""] => continue,
                ["row", i, "baseline", r] => {
                    let i: usize = i.parse().map_err(|_| err("bad row index"))?;
                    if i != rows.len() {
                        return Err(err("rows out of order"));
                    }
                    rows.push(TruthRow {
                        baseline: r.parse().map_err(|_| err("bad baseline"))?,
                        subwords: Vec::new(),
                    });
                }
                ["subword", id, "box", bx, "letters", letters] => {
                    let (i, j) = id.split_once('.').ok_or_else(|| err("bad sub-word id"))?;
                    let i: usize = i.parse().map_err(|_| err("bad sub-word id"))?;
                    let j: usize = j.parse().map_err(|_| err("bad sub-word id"))?;
                    let row = rows.get_mut(i).ok_or_else(|| err("sub-word before its row"))?;
                    if j != row.subwords.len() {
                        return Err(err("sub-words out of order"));
                    }
                    let v: Vec<usize> = bx
                        .split(',')
                        .map(|x| x.parse().map_err(|_| err("bad box")))
                        .collect::<Result<_, _>>()?;
                    if v.len() != 4 || v[0] > v[2] || v[1] > v[3] {
                        return Err(err("bad box"));
                    }
                    let mut ls = Vec::new();
                    for item in letters.split(',') {
                        let (l, f) = item.split_once(':').ok_or_else(|| err("bad letter entry"))?;
                        let mut cs = l.chars();
                        let c = match (cs.next(), cs.next()) {
                            (Some(c), None) => c,
                            _ => return Err(err("bad letter entry")),
                        };
                        ls.push((c, Form::parse(f).ok_or_else(|| err("bad form"))?));
                    }
                    row.subwords.push(TruthSubWord {
                        bbox: BBox {
                            top: v[0],
                            left: v[1],
                            bottom: v[2],
                            right: v[3],
                        },
                        letters: ls,
                        dots: Vec::new(),
                    });
                }
                _ => return Err(err("unrecognized line")),
            }
        }
        Ok(Self { rows })
    }
}

/// Renders a page; returns the grayscale image and its ground truth.
pub fn render_page(spec: &RenderSpec, db: &CivDatabase) -> Result<(GrayImage, GroundTruth), HarnessError> {
    spec.validate()?;
    let pen = Pen {
        stroke_width: spec.stroke_width,
        scale: spec.scale,
    };
    let unit = pen.unit();
    let intra_gap = (unit / 2.0).round().max(2.0) as usize;
    let word_gap = (unit * 2.0).round() as usize + intra_gap;
    let margin = (unit * 3.0).round() as usize;

    struct Placed {
        render: SubWordRender,
        left: usize,
    }
    let mut rows = Vec::new();
    for row in &spec.rows {
        let mut placed: Vec<Placed> = Vec::new();
        let mut x = 0usize;
        for (wi, word) in row.iter().enumerate() {
            for (si, sw) in word.iter().enumerate() {
                let civs: Vec<&Civ> = sw
                    .iter()
                    .map(|&(c, f)| db.find(c, f).ok_or(HarnessError::UnknownLetter(c, f)))
                    .collect::<Result<_, _>>()?;
                let render = render_subword(&civs, pen);
                if wi + si > 0 {
                    x += if si == 0 { word_gap } else { intra_gap };
                }
                // x counts from the right edge of the row
                let tight = tight_cols(&render.image);
                placed.push(Placed {
                    left: x + (tight.1 - tight.0),
                    render,
                });
                x += tight.1 - tight.0 + 1;
            }
        }
        rows.push((placed, x));
    }

    let row_width = rows.iter().map(|(_, w)| *w).max().unwrap_or(0);
    let width = row_width + 2 * margin;
    let mut extents = Vec::new();
    for (placed, _) in &rows {
        let mut up = 0usize;
        let mut down = 0usize;
        for p in placed {
            let (t, b) = tight_rows(&p.render.image);
            up = up.max(p.render.baseline - t);
            down = down.max(b - p.render.baseline);
        }
        extents.push((up, down));
    }
    let tallest = extents.iter().map(|(u, d)| u + d + 1).max().unwrap_or(1);
    let row_gap = 2 * tallest;
    let mut height = 2 * margin;
    for (i, (u, d)) in extents.iter().enumerate() {
        height += u + d + 1 + if i > 0 { row_gap } else { 0 };
    }
    let height = height.max(2 * margin + 1);
    let width = width.max(2 * margin + 1);
    let mut mask = BinaryImage::new(width, height);
    let mut truth = GroundTruth::default();
    let mut y = margin;
    for (i, ((placed, _), (up, down))) in rows.iter().zip(&extents).enumerate() {
        if i > 0 {
            y += row_gap;
        }
        let baseline = y + up;
        let mut subwords = Vec::new();
        for p in placed {
            let (tc0, tc1) = tight_cols(&p.render.image);
            // right edge of this sub-word in page columns
            let right = width - margin - 1 - (p.left - (tc1 - tc0));
            let col_shift = right as isize - tc1 as isize;
            let row_shift = baseline as isize - p.render.baseline as isize;
            let mut bbox = BBox {
                top: usize::MAX,
                left: usize::MAX,
                bottom: 0,
                right: 0,
            };
            for (r, c) in p.render.image.ink_pixels() {
                let pr = (r as isize + row_shift) as usize;
                let pc = (c as isize + col_shift) as usize;
                mask.set(pr, pc, true);
                bbox.top = bbox.top.min(pr);
                bbox.left = bbox.left.min(pc);
                bbox.bottom = bbox.bottom.max(pr);
                bbox.right = bbox.right.max(pc);
            }
            subwords.push(TruthSubWord {
                bbox,
                letters: p.render.letters.clone(),
                dots: p.render.dots.iter().map(|&(n, a, _)| (n, a)).collect(),
            });
        }
        truth.rows.push(TruthRow { baseline, subwords });
        y += up + down + 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let ink = mask.get(r, c);
            let flip = spec.noise_p > 0.0 && rng.gen::<f64>() < spec.noise_p;
            let bg = if spec.ramp {
                let t = if width > 1 { c as f64 / (width - 1) as f64 } else { 0.0 };
                (255.0 - 135.0 * t).round() as u8
            } else {
                255
            };
            samples.push(if ink != flip { 0 } else { bg });
        }
    }
    let _ = &mut truth;
    let page = GrayImage::new(width, height, samples).expect("dimensions match sample count");
    Ok((page, truth))
}

fn tight_cols(img: &BinaryImage) -> (usize, usize) {
    let cols: Vec<usize> = img.ink_pixels().into_iter().map(|p| p.1).collect();
    (
        cols.iter().copied().min().unwrap_or(0),
        cols.iter().copied().max().unwrap_or(0),
    )
}

fn tight_rows(img: &BinaryImage) -> (usize, usize) {
    let rows: Vec<usize> = img.ink_pixels().into_iter().map(|p| p.0).collect();
    (
        rows.iter().copied().min().unwrap_or(0),
        rows.iter().copied().max().unwrap_or(0),
    )
}

/// Per-length tallies; index 4 holds sub-words of five or more letters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalReport {
    pub counts: [usize; 5],
    pub correct: [usize; 5],
    /// Truth sub-words with no predicted box at IoU >= 0.5.
    pub unaligned: usize,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn total_correct(&self) -> usize {
        self.correct.iter().sum()
    }

    pub fn share(&self, bucket: usize) -> f64 {
        percent(self.counts[bucket], self.total())
    }

    pub fn precision(&self, bucket: usize) -> f64 {
        percent(self.correct[bucket], self.counts[bucket])
    }

    pub fn overall(&self) -> f64 {
        percent(self.total_correct(), self.total())
    }

    pub fn merge(&mut self, other: &EvalReport) {
        for i in 0..5 {
            self.counts[i] += other.counts[i];
            self.correct[i] += other.correct[i];
        }
        self.unaligned += other.unaligned;
    }

    /// Aligned table followed by machine-readable bucket lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:>9} {:>8} {:>11}", "letters", "subwords", "share%", "precision%");
        for i in 0..5 {
            let label = if i == 4 { "5+".to_string() } else { (i + 1).to_string() };
            let _ = writeln!(
                out,
                "{:<8} {:>9} {:>8.2} {:>11.2}",
                label,
                self.counts[i],
                self.share(i),
                self.precision(i)
            );
        }
        let _ = writeln!(
            out,
            "{:<8} {:>9} {:>8.2} {:>11.2}",
            "all",
            self.total(),
            if self.total() > 0 { 100.0 } else { 0.0 },
            self.overall()
        );
        for i in 0..5 {
            let label = if i == 4 { "5+".to_string() } else { (i + 1).to_string() };
            let _ = writeln!(
                out,
                "bucket,{label},{},{:.2},{:.2}",
                self.counts[i],
                self.share(i),
                self.precision(i)
            );
        }
        let _ = writeln!(out, "overall,{},{:.2},unaligned,{}", self.total(), self.overall(), self.unaligned);
        out
    }
}

fn percent(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        100.0 * a as f64 / b as f64
    }
}

/// Scores predictions against truth. Boxes are paired greedily by
/// descending IoU (at least 0.5); a truth sub-word is correct when its
/// partner's letters equal its own.
pub fn evaluate(predicted: &[Vec<RecognizedSubWord>], truth: &GroundTruth) -> EvalReport {
    let preds: Vec<&RecognizedSubWord> = predicted.iter().flatten().collect();
    let truths: Vec<&TruthSubWord> = truth.rows.iter().flat_map(|r| r.subwords.iter()).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in truths.iter().enumerate() {
        for (pi, p) in preds.iter().enumerate() {
            if let Some(b) = p.bbox {
                let iou = t.bbox.iou(&b);
                if iou >= 0.5 {
                    pairs.push((iou, ti, pi));
                }
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut truth_match: Vec<Option<usize>> = vec![None; truths.len()];
    let mut pred_used = vec![false; preds.len()];
    for (_, ti, pi) in pairs {
        if truth_match[ti].is_none() && !pred_used[pi] {
            truth_match[ti] = Some(pi);
            pred_used[pi] = true;
        }
    }
    let mut report = EvalReport::default();
    for (ti, t) in truths.iter().enumerate() {
        let bucket = t.letters.len().clamp(1, 5) - 1;
        report.counts[bucket] += 1;
        match truth_match[ti] {
            Some(pi) => {
                let want: String = t.letters.iter().map(|l| l.0).collect();
                if preds[pi].text() == want {
                    report.correct[bucket] += 1;
                }
            }
            None => report.unaligned += 1,
        }
    }
    report
}
