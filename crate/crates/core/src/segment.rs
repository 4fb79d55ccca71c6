//! Row bands, connected components, baselines, sub-words and dot clusters.

use crate::raster::{horizontal_projection, BinaryImage};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("band {0}..={1} contains no ink")]
    EmptyBand(usize, usize),
}

/// A text row: inclusive row range plus the detected baseline (absolute row).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowBand {
    pub top: usize,
    pub bottom: usize,
    pub baseline: usize,
}

/// Inclusive bounding box in page coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.right - self.left + 1
    }

    pub fn height(&self) -> usize {
        self.bottom - self.top + 1
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            top: self.top.min(other.top),
            left: self.left.min(other.left),
            bottom: self.bottom.max(other.bottom),
            right: self.right.max(other.right),
        }
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let top = self.top.max(other.top);
        let left = self.left.max(other.left);
        let bottom = self.bottom.min(other.bottom);
        let right = self.right.min(other.right);
        if top > bottom || left > right {
            return 0.0;
        }
        let inter = ((bottom - top + 1) * (right - left + 1)) as f64;
        inter / (self.area() as f64 + other.area() as f64 - inter)
    }
}

/// A maximal 8-connected set of ink pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// `(row, col)` pixels in row-major order.
    pub pixels: Vec<(usize, usize)>,
    pub bbox: BBox,
}

impl Component {
    pub fn from_pixels(mut pixels: Vec<(usize, usize)>) -> Self {
        assert!(!pixels.is_empty(), "component needs at least one pixel");
        pixels.sort_unstable();
        let mut bbox = BBox {
            top: usize::MAX,
            left: usize::MAX,
            bottom: 0,
            right: 0,
        };
        for &(r, c) in &pixels {
            bbox.top = bbox.top.min(r);
            bbox.left = bbox.left.min(c);
            bbox.bottom = bbox.bottom.max(r);
            bbox.right = bbox.right.max(c);
        }
        Self { pixels, bbox }
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let (sr, sc) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(a, b), &(r, c)| (a + r as f64, b + c as f64));
        (sr / n, sc / n)
    }

    /// The component drawn into its own tight image.
    pub fn to_image(&self) -> BinaryImage {
        let mut img = BinaryImage::new(self.bbox.width(), self.bbox.height());
        for &(r, c) in &self.pixels {
            img.set(r - self.bbox.top, c - self.bbox.left, true);
        }
        img
    }

    fn shifted(mut self, drow: usize) -> Self {
        for p in &mut self.pixels {
            p.0 += drow;
        }
        self.bbox.top += drow;
        self.bbox.bottom += drow;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotCluster {
    pub centroid: (f64, f64),
    pub count: u8,
    pub placement: Placement,
}

/// One main body and the smaller components that belong to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SubWord {
    pub body: Component,
    pub attached: Vec<Component>,
    pub band: RowBand,
    /// Inclusive column range covering the body and its attachments.
    pub x_range: (usize, usize),
}

impl SubWord {
    pub fn bbox(&self) -> BBox {
        self.attached
            .iter()
            .fold(self.body.bbox, |acc, c| acc.union(&c.bbox))
    }
}

/// Thresholds for counting dots in a cluster, relative to the pen size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotThresholds {
    /// Below this normalized area (and aspect) a cluster is a single dot.
    pub single_area: f64,
    /// Width/height ratio at which a cluster reads as two side-by-side dots.
    pub pair_aspect: f64,
    /// Upper normalized area for a wide two-dot cluster.
    pub pair_area: f64,
}

impl Default for DotThresholds {
    fn default() -> Self {
        Self {
            single_area: 2.5,
            pair_aspect: 1.6,
            pair_area: 5.0,
        }
    }
}

/// Maximal runs of non-empty rows; neighbouring runs separated by less than
/// `merge_factor` times the median run height, or by less than `min_gap`
/// rows, are fused.
pub fn split_rows(page: &BinaryImage, merge_factor: f64, min_gap: f64) -> Vec<(usize, usize)> {
    let proj = horizontal_projection(page);
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (r, &n) in proj.counts.iter().enumerate() {
        match (n > 0, start) {
            (true, None) => start = Some(r),
            (false, Some(s)) => {
                runs.push((s, r - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, proj.counts.len() - 1));
    }
    if runs.len() < 2 {
        return runs;
    }
    let mut heights: Vec<usize> = runs.iter().map(|&(t, b)| b - t + 1).collect();
    heights.sort_unstable();
    let n = heights.len();
    let median = if n % 2 == 1 {
        heights[n / 2] as f64
    } else {
        (heights[n / 2 - 1] + heights[n / 2]) as f64 / 2.0
    };
    let limit = (merge_factor * median).max(min_gap);
    let mut merged: Vec<(usize, usize)> = vec![runs[0]];
    for &(t, b) in &runs[1..] {
        let last = merged.last_mut().unwrap();
        let gap = t - last.1 - 1;
        if (gap as f64) < limit {
            last.1 = b;
        } else {
            merged.push((t, b));
        }
    }
    merged
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// 8-connected component labeling (two-pass, union-find). Components come
/// out ordered by their first pixel in row-major order.
pub fn connected_components(img: &BinaryImage) -> Vec<Component> {
    let (w, h) = (img.width(), img.height());
    const NONE: u32 = u32::MAX;
    let mut labels = vec![NONE; w * h];
    let mut sets = DisjointSet::new();
    for r in 0..h {
        for c in 0..w {
            if !img.get(r, c) {
                continue;
            }
            let mut label = NONE;
            // previously visited neighbours: W, NW, N, NE
            let prior = [
                (r as isize, c as isize - 1),
                (r as isize - 1, c as isize - 1),
                (r as isize - 1, c as isize),
                (r as isize - 1, c as isize + 1),
            ];
            for (pr, pc) in prior {
                if pr < 0 || pc < 0 || pc as usize >= w {
                    continue;
                }
                let l = labels[pr as usize * w + pc as usize];
                if l == NONE {
                    continue;
                }
                if label == NONE {
                    label = l;
                } else {
                    sets.union(label, l);
                }
            }
            if label == NONE {
                label = sets.make();
            }
            labels[r * w + c] = label;
        }
    }
    let mut slot_of_root: Vec<u32> = vec![NONE; sets.parent.len()];
    let mut groups: Vec<Vec<(usize, usize)>> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let l = labels[r * w + c];
            if l == NONE {
                continue;
            }
            let root = sets.find(l) as usize;
            if slot_of_root[root] == NONE {
                slot_of_root[root] = groups.len() as u32;
                groups.push(Vec::new());
            }
            groups[slot_of_root[root] as usize].push((r, c));
        }
    }
    groups.into_iter().map(Component::from_pixels).collect()
}

/// Row of maximal ink within `[top, bottom]`; ties go to the lowest row.
pub fn detect_baseline(page: &BinaryImage, top: usize, bottom: usize) -> Result<usize, SegmentError> {
    let mut best: Option<(usize, usize)> = None;
    for r in top..=bottom.min(page.height().saturating_sub(1)) {
        let n = (0..page.width()).filter(|&c| page.get(r, c)).count();
        if n > 0 && best.is_none_or(|(_, m)| n >= m) {
            best = Some((r, n));
        }
    }
    best.map(|(r, _)| r).ok_or(SegmentError::EmptyBand(top, bottom))
}

/// Components of the rows `[top, bottom]`, in page coordinates.
pub fn band_components(page: &BinaryImage, top: usize, bottom: usize) -> Vec<Component> {
    let band = page.crop(top, 0, bottom, page.width() - 1);
    connected_components(&band)
        .into_iter()
        .map(|c| c.shifted(top))
        .collect()
}

fn overlap(a: (usize, usize), b: (usize, usize)) -> usize {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo > hi {
        0
    } else {
        hi - lo + 1
    }
}

/// Groups a band's components into sub-words. Components of at least
/// `min_body_area` pixels whose longer box side reaches `min_body_extent`
/// are bodies; every other component joins the body
/// whose column range overlaps it most, or failing that the body with the
/// nearest centroid column. Output is right-to-left by right edge.
pub fn split_subwords(
    components: Vec<Component>,
    min_body_area: f64,
    min_body_extent: f64,
    band: RowBand,
) -> Vec<SubWord> {
    if components.is_empty() {
        return Vec::new();
    }
    let (mut bodies, mut rest): (Vec<Component>, Vec<Component>) = components
        .into_iter()
        .partition(|c| {
            c.area() as f64 >= min_body_area && c.bbox.width().max(c.bbox.height()) as f64 >= min_body_extent
        });
    if bodies.is_empty() {
        let (idx, _) = rest
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.area().cmp(&b.area()).then(ib.cmp(ia)))
            .unwrap();
        bodies.push(rest.remove(idx));
    }
    let mut subwords: Vec<SubWord> = bodies
        .into_iter()
        .map(|body| SubWord {
            x_range: (body.bbox.left, body.bbox.right),
            body,
            attached: Vec::new(),
            band,
        })
        .collect();
    for comp in rest {
        let span = (comp.bbox.left, comp.bbox.right);
        let best_overlap = subwords
            .iter()
            .enumerate()
            .map(|(i, s)| (overlap(span, (s.body.bbox.left, s.body.bbox.right)), i))
            .filter(|&(o, _)| o > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let target = match best_overlap {
            Some((_, i)) => i,
            None => {
                let cc = comp.centroid().1;
                subwords
                    .iter()
                    .enumerate()
                    .map(|(i, s)| ((s.body.centroid().1 - cc).abs(), i))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .unwrap()
                    .1
            }
        };
        let sw = &mut subwords[target];
        sw.x_range = (sw.x_range.0.min(span.0), sw.x_range.1.max(span.1));
        sw.attached.push(comp);
    }
    subwords.sort_by(|a, b| {
        b.body
            .bbox
            .right
            .cmp(&a.body.bbox.right)
            .then(b.body.bbox.left.cmp(&a.body.bbox.left))
    });
    subwords
}

/// Estimates the number of dots in each attached component from its area
/// and aspect ratio relative to the pen size.
pub fn classify_dots(sub: &SubWord, pen: f64, thresholds: &DotThresholds) -> Vec<DotCluster> {
    sub.attached
        .iter()
        .map(|comp| classify_cluster(comp, pen, sub.band.baseline, thresholds))
        .collect()
}

pub fn classify_cluster(
    comp: &Component,
    pen: f64,
    baseline: usize,
    t: &DotThresholds,
) -> DotCluster {
    let a = comp.area() as f64 / (pen * pen);
    let aspect = comp.bbox.width() as f64 / comp.bbox.height() as f64;
    let count = if a < t.single_area && aspect < t.pair_aspect {
        1
    } else if aspect >= t.pair_aspect && a < t.pair_area {
        2
    } else {
        3
    };
    let centroid = comp.centroid();
    DotCluster {
        centroid,
        count,
        placement: if centroid.0 < baseline as f64 {
            Placement::Above
        } else {
            Placement::Below
        },
    }
}
