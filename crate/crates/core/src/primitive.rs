//! Quantized line fitting on strokes and the rules that turn line sequences
//! into primitive codes.

use crate::skeleton::Px;
use std::fmt;
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrimitiveError {
    #[error("stroke has no pixels")]
    EmptyPath,
    #[error("unknown primitive code {0:?}")]
    UnknownCode(String),
}

/// One of the eight line directions, `index * 22.5` degrees counter-clockwise
/// from the positive x axis (x = column, y = up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuantAngle(u8);

impl QuantAngle {
    pub const STEP: f64 = 22.5;

    pub fn from_index(index: u8) -> Option<Self> {
        (index < 8).then_some(Self(index))
    }

    pub fn from_degrees(deg: f64) -> Option<Self> {
        let k = deg / Self::STEP;
        (k.fract() == 0.0 && (0.0..8.0).contains(&k)).then_some(Self(k as u8))
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (0..8).map(Self)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0 as f64 * Self::STEP
    }

    /// Nearest quantized angle of the undirected line through `(dx, dy)`.
    pub fn of_direction(dx: f64, dy: f64) -> Self {
        let deg = dy.atan2(dx).to_degrees().rem_euclid(180.0);
        Self(((deg / Self::STEP).round() as u8) % 8)
    }

    /// Smallest angle between the two undirected lines, in quanta (0..=4).
    pub fn turn(self, other: Self) -> u8 {
        let d = self.0.abs_diff(other.0);
        d.min(8 - d)
    }
}

impl fmt::Display for QuantAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.degrees())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSegment {
    pub angle: QuantAngle,
    /// Perpendicular offset bin of the fitted line.
    pub offset: i64,
    /// First and last path pixel of the segment.
    pub start: Px,
    pub end: Px,
    /// Number of pixels within tolerance of the fitted line.
    pub support: usize,
    /// Path indices owned by this segment, including merged leftovers.
    pub range: Range<usize>,
}

impl LineSegment {
    pub fn midpoint(&self) -> (f64, f64) {
        (
            (self.start.0 + self.end.0) as f64 / 2.0,
            (self.start.1 + self.end.1) as f64 / 2.0,
        )
    }

    /// Distance from `p` to the fitted line.
    pub fn distance(&self, p: Px) -> f64 {
        (offset_of(p, self.angle) - self.offset as f64).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveCode {
    B,
    S,
    V,
    H,
    C,
    U,
    O,
    L,
}

impl PrimitiveCode {
    pub const ALL: [PrimitiveCode; 8] = [
        PrimitiveCode::B,
        PrimitiveCode::S,
        PrimitiveCode::V,
        PrimitiveCode::H,
        PrimitiveCode::C,
        PrimitiveCode::U,
        PrimitiveCode::O,
        PrimitiveCode::L,
    ];

    pub fn letter(self) -> char {
        match self {
            PrimitiveCode::B => 'B',
            PrimitiveCode::S => 'S',
            PrimitiveCode::V => 'V',
            PrimitiveCode::H => 'H',
            PrimitiveCode::C => 'C',
            PrimitiveCode::U => 'U',
            PrimitiveCode::O => 'O',
            PrimitiveCode::L => 'L',
        }
    }

    pub fn parse(s: &str) -> Result<Self, PrimitiveError> {
        Self::ALL
            .into_iter()
            .find(|c| s.len() == 1 && s.starts_with(c.letter()))
            .ok_or_else(|| PrimitiveError::UnknownCode(s.to_string()))
    }

    /// Code for a lone line at this angle.
    pub fn of_line(angle: QuantAngle) -> Self {
        match angle.index() {
            0 => PrimitiveCode::H,
            4 => PrimitiveCode::V,
            1..=3 => PrimitiveCode::S,
            _ => PrimitiveCode::B,
        }
    }
}

impl fmt::Display for PrimitiveCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub min_support: usize,
    pub tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            min_support: 3,
            tolerance: 1.0,
        }
    }
}

fn offset_of(p: Px, angle: QuantAngle) -> f64 {
    let (x, y) = (p.1 as f64, -(p.0 as f64));
    let t = angle.degrees().to_radians();
    x * t.sin() - y * t.cos()
}

/// Longest run of consecutive free path indices within tolerance of the
/// line `(angle, offset)`.
fn best_run(offsets: &[f64], free: &[bool], b: i64, tol: f64) -> Range<usize> {
    let mut best = 0..0;
    let mut start = None;
    for i in 0..=offsets.len() {
        let hit = i < offsets.len() && free[i] && (offsets[i] - b as f64).abs() <= tol + 1e-9;
        match (hit, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.len() {
                    best = s..i;
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Approximates a pixel path with quantized line segments. The cell with
/// the longest contiguous run of free pixels wins each round (ties: smaller
/// squared residual, lower angle, lower offset); rounds stop once the best
/// run is shorter than `min_support`. Leftover pixels join the nearest
/// segment along the path. Paths shorter than `min_support` yield one segment at the angle of their
/// end-to-end direction.
pub fn fit_lines(path: &[Px], cfg: &FitConfig) -> Result<Vec<LineSegment>, PrimitiveError> {
    if path.is_empty() {
        return Err(PrimitiveError::EmptyPath);
    }
    let n = path.len();
    if n < cfg.min_support.max(2) {
        let (a, b) = (path[0], path[n - 1]);
        let angle = QuantAngle::of_direction(b.1 as f64 - a.1 as f64, a.0 as f64 - b.0 as f64);
        return Ok(vec![LineSegment {
            angle,
            offset: offset_of(a, angle).round() as i64,
            start: a,
            end: b,
            support: n,
            range: 0..n,
        }]);
    }
    let offsets: Vec<Vec<f64>> = QuantAngle::all()
        .map(|a| path.iter().map(|&p| offset_of(p, a)).collect())
        .collect();
    let mut free = vec![true; n];
    let mut found: Vec<LineSegment> = Vec::new();
    loop {
        let mut best: Option<(usize, f64, QuantAngle, i64, Range<usize>)> = None;
        for angle in QuantAngle::all() {
            let offs = &offsets[angle.index() as usize];
            let (lo, hi) = offs
                .iter()
                .zip(&free)
                .filter(|(_, &f)| f)
                .fold((i64::MAX, i64::MIN), |(lo, hi), (&o, _)| {
                    (lo.min(o.round() as i64), hi.max(o.round() as i64))
                });
            if lo > hi {
                continue;
            }
            for b in lo..=hi {
                let run = best_run(offs, &free, b, cfg.tolerance);
                let residual: f64 = offs[run.clone()].iter().map(|o| (o - b as f64).powi(2)).sum();
                let better = best.as_ref().is_none_or(|(len, res, ..)| {
                    run.len() > *len || (run.len() == *len && residual < res - 1e-9)
                });
                if better {
                    best = Some((run.len(), residual, angle, b, run));
                }
            }
        }
        let Some((len, _, angle, offset, run)) = best else { break };
        if len < cfg.min_support {
            break;
        }
        for f in &mut free[run.clone()] {
            *f = false;
        }
        found.push(LineSegment {
            angle,
            offset,
            start: path[run.start],
            end: path[run.end - 1],
            support: len,
            range: run,
        });
    }
    if found.is_empty() {
        let (a, b) = (path[0], path[n - 1]);
        let angle = QuantAngle::of_direction(b.1 as f64 - a.1 as f64, a.0 as f64 - b.0 as f64);
        return Ok(vec![LineSegment {
            angle,
            offset: offset_of(a, angle).round() as i64,
            start: a,
            end: b,
            support: 0,
            range: 0..n,
        }]);
    }
    found.sort_by_key(|s| s.range.start);
    // Hand each leftover index to the closer neighbouring segment.
    let k = found.len();
    found[0].range.start = 0;
    found[k - 1].range.end = n;
    for i in 0..k - 1 {
        let gap = found[i].range.end..found[i + 1].range.start;
        let mid = gap.start + gap.len().div_ceil(2);
        found[i].range.end = mid;
        found[i + 1].range.start = mid;
    }
    Ok(found)
}

/// Applies the primitive rules and reports which segments each code covers.
pub fn classify_spans(segs: &[LineSegment], from_cycle: bool) -> Vec<(PrimitiveCode, Range<usize>)> {
    if from_cycle {
        return vec![(PrimitiveCode::O, 0..segs.len())];
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < segs.len() {
        if i + 3 <= segs.len() {
            if let Some(code) = open_box(&segs[i..i + 3]) {
                out.push((code, i..i + 3));
                i += 3;
                continue;
            }
        }
        if i + 2 <= segs.len() && segs[i].angle.turn(segs[i + 1].angle) >= 3 {
            out.push((PrimitiveCode::L, i..i + 2));
            i += 2;
            continue;
        }
        out.push((PrimitiveCode::of_line(segs[i].angle), i..i + 1));
        i += 1;
    }
    out
}

pub fn classify(segs: &[LineSegment], from_cycle: bool) -> Vec<PrimitiveCode> {
    classify_spans(segs, from_cycle)
        .into_iter()
        .map(|(c, _)| c)
        .collect()
}

/// C for a box opening to the right, U for one opening upward. The outer
/// sides must be traversed in opposite directions; a staircase is no box.
fn open_box(w: &[LineSegment]) -> Option<PrimitiveCode> {
    let (a, m, b) = (&w[0], &w[1], &w[2]);
    if a.angle.turn(b.angle) > 1 || m.angle.turn(a.angle) < 3 || m.angle.turn(b.angle) < 3 {
        return None;
    }
    let along = |s: &LineSegment| (s.end.0 as f64 - s.start.0 as f64, s.end.1 as f64 - s.start.1 as f64);
    let (da, db) = (along(a), along(b));
    if da.0 * db.0 + da.1 * db.1 >= 0.0 {
        return None;
    }
    let mid = m.midpoint();
    let far_r = (a.start.0 + b.end.0) as f64 / 2.0;
    let far_c = (a.start.1 + b.end.1) as f64 / 2.0;
    let (dx, dy) = (far_c - mid.1, mid.0 - far_r);
    if dx.abs() >= dy.abs() {
        (dx > 0.0).then_some(PrimitiveCode::C)
    } else {
        (dy > 0.0).then_some(PrimitiveCode::U)
    }
}

/// A primitive found on a stroke and the stroke pixels it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub code: PrimitiveCode,
    pub pixels: Vec<Px>,
}

impl Primitive {
    pub fn col_range(&self) -> (usize, usize) {
        let lo = self.pixels.iter().map(|p| p.1).min().unwrap_or(0);
        let hi = self.pixels.iter().map(|p| p.1).max().unwrap_or(0);
        (lo, hi)
    }
}

pub fn stroke_to_primitives(path: &[Px], cfg: &FitConfig) -> Result<Vec<Primitive>, PrimitiveError> {
    let segs = fit_lines(path, cfg)?;
    Ok(classify_spans(&segs, false)
        .into_iter()
        .map(|(code, span)| {
            let from = segs[span.start].range.start;
            let to = segs[span.end - 1].range.end;
            Primitive {
                code,
                pixels: path[from..to].to_vec(),
            }
        })
        .collect())
}

/// Debug record: `(angle,len)+ -> codes`.
pub fn describe(segs: &[LineSegment]) -> String {
    let lines: Vec<String> = segs
        .iter()
        .map(|s| format!("({},{})", s.angle, s.range.len()))
        .collect();
    let codes: String = classify(segs, false).iter().map(|c| c.letter()).collect();
    format!("{} -> {}", lines.join(""), codes)
}
