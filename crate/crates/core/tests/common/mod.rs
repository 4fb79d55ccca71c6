#![allow(dead_code)]

use primocr::harness::{render_page, RenderSpec};
use primocr::pipeline::{recognize_page, Config};
use primocr::recognize::load_civ_db;
use std::collections::BTreeMap;

pub const CIV: &[u8] = include_bytes!("../../data/civ.txt");
const KNOWN: &str = include_str!("../../data/known_failures.txt");

pub fn known_failures() -> BTreeMap<String, String> {
    KNOWN
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (record, cause) = l.split_once(" # ").expect("record # cause");
            (record.trim().to_string(), cause.trim().to_string())
        })
        .collect()
}

/// Renders each record alone at stroke 3, scale 1 and returns the records
/// that do not come back as exactly one letter with the same form.
pub fn round_trip_failures() -> (usize, Vec<String>) {
    let db = load_civ_db(CIV).unwrap();
    let cfg = Config::default();
    let mut failures = Vec::new();
    for civ in &db.records {
        let spec = RenderSpec {
            rows: vec![vec![vec![vec![(civ.letter, civ.form)]]]],
            stroke_width: 3,
            scale: 1.0,
            ..RenderSpec::default()
        };
        let (page, _) = render_page(&spec, &db).unwrap();
        let result = recognize_page(&page, &db, &cfg, 1, false).unwrap();
        let got: Vec<_> = result
            .rows
            .iter()
            .flatten()
            .flat_map(|s| s.letters.iter().map(|l| (l.letter, l.form)))
            .collect();
        if got != [(civ.letter, civ.form)] {
            failures.push(civ.to_line());
        }
    }
    (db.records.len(), failures)
}
