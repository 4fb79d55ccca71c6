//! End-to-end page recognition and its configuration.

use crate::preprocess::{self, PenStatistic, PreprocessConfig, PreprocessError};
use crate::primitive::{stroke_to_primitives, FitConfig};
use crate::raster::{BinaryImage, GrayImage};
use crate::recognize::{assemble_text, build_sivs, match_subword, CivDatabase, RecognizedSubWord, SubWordShapes};
use crate::segment::{self, BBox, DotThresholds, RowBand, SubWord};
use crate::skeleton::{self, Skeleton};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Preprocess(PreprocessError),
}

/// Every tunable of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub preprocess: PreprocessConfig,
    pub band_merge_factor: f64,
    /// Bands closer than this many pens are always merged.
    pub band_merge_pens: f64,
    /// Body area threshold in units of pen².
    pub body_area_factor: f64,
    /// Minimum longer box side of a body, in pens.
    pub body_extent_factor: f64,
    pub dots: DotThresholds,
    pub fit: FitConfig,
    pub spur_length: usize,
    pub min_stroke_length: usize,
    pub spacing_factor: f64,
    /// Reference sub-word gap, in pens, for rows with fewer than three gaps.
    pub spacing_fallback: f64,
    pub civ_db_path: Option<PathBuf>,
    pub dump_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            band_merge_factor: 0.2,
            band_merge_pens: 2.0,
            body_area_factor: 3.0,
            body_extent_factor: 3.2,
            dots: DotThresholds::default(),
            fit: FitConfig::default(),
            spur_length: 2,
            min_stroke_length: 2,
            spacing_factor: 1.5,
            spacing_fallback: 2.5,
            civ_db_path: None,
            dump_dir: None,
        }
    }
}

impl Config {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.parse().map_err(|_| format!("bad value {value:?} for {key}"))
        }
        match key {
            "se_halfwidth" => self.preprocess.se_halfwidth = num(key, value)?,
            "target_pen" => self.preprocess.target_pen = num(key, value)?,
            "scale_min" => self.preprocess.scale_min = num(key, value)?,
            "scale_max" => self.preprocess.scale_max = num(key, value)?,
            "pen_statistic" => {
                self.preprocess.pen_statistic =
                    PenStatistic::parse(value).ok_or_else(|| format!("bad value {value:?} for {key}"))?
            }
            "band_merge_factor" => self.band_merge_factor = num(key, value)?,
            "band_merge_pens" => self.band_merge_pens = num(key, value)?,
            "body_area_factor" => self.body_area_factor = num(key, value)?,
            "body_extent_factor" => self.body_extent_factor = num(key, value)?,
            "dot_single_area" => self.dots.single_area = num(key, value)?,
            "dot_pair_aspect" => self.dots.pair_aspect = num(key, value)?,
            "dot_pair_area" => self.dots.pair_area = num(key, value)?,
            "min_support" => self.fit.min_support = num(key, value)?,
            "fit_tolerance" => self.fit.tolerance = num(key, value)?,
            "spur_length" => self.spur_length = num(key, value)?,
            "min_stroke_length" => self.min_stroke_length = num(key, value)?,
            "spacing_factor" => self.spacing_factor = num(key, value)?,
            "spacing_fallback" => self.spacing_fallback = num(key, value)?,
            "civ_db_path" => self.civ_db_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            "dump_dir" => self.dump_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ConfigError::Parse { line: i + 1, message };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            cfg.set(k.trim(), v.trim()).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.preprocess
            .validate()
            .map_err(|_| ConfigError::Invalid("preprocessing settings out of range"))?;
        if !(self.band_merge_factor >= 0.0 && self.band_merge_pens >= 0.0 && self.body_extent_factor >= 0.0)
            || !(self.body_area_factor > 0.0)
        {
            return Err(ConfigError::Invalid("band and body settings must be positive"));
        }
        if self.fit.min_support < 1 || !(self.fit.tolerance >= 0.0) {
            return Err(ConfigError::Invalid("min_support must be at least 1"));
        }
        if !(self.spacing_factor > 0.0) || !(self.spacing_fallback > 0.0) {
            return Err(ConfigError::Invalid("spacing settings must be positive"));
        }
        Ok(())
    }

    /// Effective settings in the file format; parsing the output gives back
    /// the same config.
    pub fn render(&self) -> String {
        let p = &self.preprocess;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut out = String::new();
        let _ = writeln!(out, "se_halfwidth = {}", p.se_halfwidth);
        let _ = writeln!(out, "target_pen = {:?}", p.target_pen);
        let _ = writeln!(out, "scale_min = {:?}", p.scale_min);
        let _ = writeln!(out, "scale_max = {:?}", p.scale_max);
        let _ = writeln!(out, "pen_statistic = {}", p.pen_statistic.name());
        let _ = writeln!(out, "band_merge_factor = {:?}", self.band_merge_factor);
        let _ = writeln!(out, "band_merge_pens = {:?}", self.band_merge_pens);
        let _ = writeln!(out, "body_area_factor = {:?}", self.body_area_factor);
        let _ = writeln!(out, "body_extent_factor = {:?}", self.body_extent_factor);
        let _ = writeln!(out, "dot_single_area = {:?}", self.dots.single_area);
        let _ = writeln!(out, "dot_pair_aspect = {:?}", self.dots.pair_aspect);
        let _ = writeln!(out, "dot_pair_area = {:?}", self.dots.pair_area);
        let _ = writeln!(out, "min_support = {}", self.fit.min_support);
        let _ = writeln!(out, "fit_tolerance = {:?}", self.fit.tolerance);
        let _ = writeln!(out, "spur_length = {}", self.spur_length);
        let _ = writeln!(out, "min_stroke_length = {}", self.min_stroke_length);
        let _ = writeln!(out, "spacing_factor = {:?}", self.spacing_factor);
        let _ = writeln!(out, "spacing_fallback = {:?}", self.spacing_fallback);
        let _ = writeln!(out, "civ_db_path = {}", path(&self.civ_db_path));
        let _ = writeln!(out, "dump_dir = {}", path(&self.dump_dir));
        out
    }
}

/// Intermediate images kept for debug dumps.
#[derive(Debug, Clone, Default)]
pub struct Stages {
    pub binarized: Option<BinaryImage>,
    pub filtered: Option<BinaryImage>,
    pub normalized: Option<BinaryImage>,
    pub bands: Vec<BinaryImage>,
    pub skeletons: Vec<BinaryImage>,
}

#[derive(Debug, Clone, Default)]
pub struct PageResult {
    /// Sub-words per row, right to left, with boxes in input-page pixels.
    pub rows: Vec<Vec<RecognizedSubWord>>,
    pub text: String,
    pub stages: Stages,
}

struct SubWordResult {
    recognized: RecognizedSubWord,
    normalized_box: BBox,
    skeleton: BinaryImage,
}

/// Shapes found in one sub-word body.
pub fn subword_shapes(sub: &SubWord, cfg: &Config) -> (SubWordShapes, BinaryImage) {
    let sk = Skeleton::of_component(&sub.body);
    let graph = skeleton::build_graph(&sk);
    let pruned = skeleton::prune_spurs(&graph, cfg.spur_length);
    let (curves, rest) = skeleton::detect_closed_curves(&pruned);
    let strokes = skeleton::extract_strokes(&rest, cfg.min_stroke_length)
        .into_iter()
        .filter_map(|s| stroke_to_primitives(&s.path, &cfg.fit).ok())
        .filter(|p| !p.is_empty())
        .collect();
    (SubWordShapes { strokes, curves }, sk.image)
}

fn recognize_subword(sub: &SubWord, pen: f64, db: &CivDatabase, cfg: &Config) -> SubWordResult {
    let dots = segment::classify_dots(sub, pen, &cfg.dots);
    let (shapes, skeleton) = subword_shapes(sub, cfg);
    let sivs = build_sivs(&shapes, &dots, sub.band.baseline, pen);
    SubWordResult {
        recognized: match_subword(&sivs, db),
        normalized_box: sub.bbox(),
        skeleton,
    }
}

fn to_input_box(b: BBox, scale: f64, width: usize, height: usize) -> BBox {
    let lo = |v: usize, max: usize| ((v as f64 / scale).floor() as usize).min(max - 1);
    let hi = |v: usize, max: usize| ((((v + 1) as f64 / scale).ceil() as usize).max(1) - 1).min(max - 1);
    BBox {
        top: lo(b.top, height),
        left: lo(b.left, width),
        bottom: hi(b.bottom, height),
        right: hi(b.right, width),
    }
}

/// Runs the whole pipeline on a page. `jobs` threads share the work on
/// sub-words; output does not depend on `jobs`.
pub fn recognize_page(
    page: &GrayImage,
    db: &CivDatabase,
    cfg: &Config,
    jobs: usize,
    keep_stages: bool,
) -> Result<PageResult, PipelineError> {
    let mut result = PageResult::default();
    let binary = preprocess::binarize(page, &cfg.preprocess);
    let filtered = preprocess::median_filter(&binary);
    let (normalized, scale) = match preprocess::normalize(&filtered, &cfg.preprocess) {
        Ok(v) => v,
        Err(PreprocessError::EmptyImage) => {
            if keep_stages {
                result.stages.binarized = Some(binary);
                result.stages.filtered = Some(filtered);
            }
            return Ok(result);
        }
        Err(e) => return Err(PipelineError::Preprocess(e)),
    };
    let pen = preprocess::estimate_pen_with(&normalized, cfg.preprocess.pen_statistic).unwrap_or(cfg.preprocess.target_pen);
    let min_body = cfg.body_area_factor * pen * pen;
    let min_extent = cfg.body_extent_factor * pen;

    let mut work: Vec<(usize, SubWord)> = Vec::new();
    let bands = segment::split_rows(&normalized, cfg.band_merge_factor, cfg.band_merge_pens * pen);
    for (i, &(top, bottom)) in bands.iter().enumerate() {
        let Ok(baseline) = segment::detect_baseline(&normalized, top, bottom) else {
            continue;
        };
        let comps = segment::band_components(&normalized, top, bottom);
        let band = RowBand { top, bottom, baseline };
        for sub in segment::split_subwords(comps, min_body, min_extent, band) {
            work.push((i, sub));
        }
        if keep_stages {
            result
                .stages
                .bands
                .push(normalized.crop(top, 0, bottom, normalized.width() - 1));
        }
    }

    let run = || -> Vec<SubWordResult> {
        work.par_iter()
            .map(|(_, sub)| recognize_subword(sub, pen, db, cfg))
            .collect()
    };
    let outputs = if jobs <= 1 {
        work.iter()
            .map(|(_, sub)| recognize_subword(sub, pen, db, cfg))
            .collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| PipelineError::Threads(e.to_string()))?
            .install(run)
    };

    let mut rows: Vec<Vec<RecognizedSubWord>> = vec![Vec::new(); bands.len()];
    let mut normalized_rows: Vec<Vec<RecognizedSubWord>> = vec![Vec::new(); bands.len()];
    for ((band, _), out) in work.iter().zip(outputs) {
        let mut rec = out.recognized;
        rec.bbox = Some(out.normalized_box);
        normalized_rows[*band].push(rec.clone());
        rec.bbox = Some(to_input_box(out.normalized_box, scale, page.width(), page.height()));
        rows[*band].push(rec);
        if keep_stages {
            result.stages.skeletons.push(out.skeleton);
        }
    }
    let keep: Vec<bool> = rows.iter().map(|r| !r.is_empty()).collect();
    result.rows = rows.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(r, _)| r).collect();
    let normalized_rows: Vec<_> = normalized_rows.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(r, _)| r).collect();
    result.text = assemble_text(&normalized_rows, cfg.spacing_factor, cfg.spacing_fallback * pen);
    if keep_stages {
        result.stages.binarized = Some(binary);
        result.stages.filtered = Some(filtered);
        result.stages.normalized = Some(normalized);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let mut cfg = Config::default();
        cfg.set("body_area_factor", "2.5").unwrap();
        cfg.set("pen_statistic", "mean").unwrap();
        cfg.set("civ_db_path", "/tmp/x.txt").unwrap();
        let again = Config::parse(&cfg.render()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(Config::parse(&Config::default().render()).unwrap(), Config::default());
    }

    #[test]
    fn config_rejects_unknown_and_bad_values() {
        assert!(matches!(Config::parse("colour = red"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(Config::parse("# c\nmin_support = x"), Err(ConfigError::Parse { line: 2, .. })));
        assert!(matches!(Config::parse("target_pen"), Err(ConfigError::Parse { .. })));
        assert!(matches!(Config::parse("min_support = 0"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn blank_page_is_empty() {
        let db = crate::recognize::CivDatabase::from_records(vec![]).unwrap();
        let page = GrayImage::filled(50, 40, 255);
        let r = recognize_page(&page, &db, &Config::default(), 1, false).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.text, "");
    }

    #[test]
    fn input_boxes_scale_back() {
        let b = BBox {
            top: 4,
            left: 8,
            bottom: 11,
            right: 15,
        };
        assert_eq!(
            to_input_box(b, 2.0, 100, 100),
            BBox {
                top: 2,
                left: 4,
                bottom: 5,
                right: 7
            }
        );
        assert_eq!(to_input_box(b, 1.0, 100, 100), b);
    }
}
