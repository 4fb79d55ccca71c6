//! One test per acceptance criterion; each prints a PASS/FAIL line with
//! the measured value before asserting.

mod common;

use primocr::harness::{evaluate, implied_form, render_letter, render_page, EvalReport, Pen, RenderSpec, RowSpec, SubWordSpec};
use primocr::pipeline::{recognize_page, Config};
use primocr::preprocess::{self, PreprocessConfig};
use primocr::primitive::{fit_lines, stroke_to_primitives, FitConfig, PrimitiveCode, QuantAngle};
use primocr::raster::{BinaryImage, GrayImage};
use primocr::recognize::{load_civ_db, CivDatabase, Form, RecognizedSubWord, ALPHABET};
use primocr::segment::{self, connected_components, BBox, Component};
use primocr::skeleton::{self, m_neighbors, thin, Skeleton};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

fn report(id: u8, name: &str, ok: bool, detail: String) {
    println!("{} {id:02} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id:02} {name}: {detail}");
}

fn db() -> CivDatabase {
    load_civ_db(common::CIV).unwrap()
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// ---- shared oracles and generators ----

const N8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
const N4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

/// Flood-fill labelling; returns components as sorted pixel sets.
fn flood_components(img: &BinaryImage, ink: bool, nbrs: &[(isize, isize)]) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if img.get(r, c) != ink || seen[r * w + c] {
                continue;
            }
            seen[r * w + c] = true;
            let mut queue = VecDeque::from([(r, c)]);
            let mut comp = Vec::new();
            while let Some((y, x)) = queue.pop_front() {
                comp.push((y, x));
                for &(dy, dx) in nbrs {
                    let (ny, nx) = (y as isize + dy, x as isize + dx);
                    if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                        continue;
                    }
                    let (ny, nx) = (ny as usize, nx as usize);
                    if img.get(ny, nx) == ink && !seen[ny * w + nx] {
                        seen[ny * w + nx] = true;
                        queue.push_back((ny, nx));
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
    }
    out.sort();
    out
}

/// Background regions (4-connected) that do not touch the border.
fn holes(img: &BinaryImage) -> usize {
    let (w, h) = (img.width(), img.height());
    flood_components(img, false, &N4)
        .iter()
        .filter(|c| c.iter().all(|&(r, col)| r > 0 && col > 0 && r + 1 < h && col + 1 < w))
        .count()
}

fn has_square(img: &BinaryImage) -> bool {
    (1..img.height()).any(|r| (1..img.width()).any(|c| img.get(r, c) && img.get(r - 1, c) && img.get(r, c - 1) && img.get(r - 1, c - 1)))
}

/// Cycle rank |E| - |V| + |C| of the m-adjacency pixel graph.
fn cycle_rank(img: &BinaryImage) -> usize {
    let v = img.ink_count();
    let degree_sum: usize = img.ink_pixels().iter().map(|&(r, c)| m_neighbors(img, r, c).len()).sum();
    let c = flood_components(img, true, &N8).len();
    degree_sum / 2 + c - v
}

fn pad(img: &BinaryImage, margin: usize) -> BinaryImage {
    let mut out = BinaryImage::new(img.width() + 2 * margin, img.height() + 2 * margin);
    for (r, c) in img.ink_pixels() {
        out.set(r + margin, c + margin, true);
    }
    out
}

fn stamp(img: &mut BinaryImage, r: f64, c: f64, half: f64) {
    let (h, w) = (img.height() as f64, img.width() as f64);
    let (r0, r1) = ((r - half).round().max(0.0), (r + half).round().min(h - 1.0));
    let (c0, c1) = ((c - half).round().max(0.0), (c + half).round().min(w - 1.0));
    for y in r0 as usize..=r1 as usize {
        for x in c0 as usize..=c1 as usize {
            img.set(y, x, true);
        }
    }
}

/// Square-brush polyline through `(row, col)` points.
fn polyline(img: &mut BinaryImage, pts: &[(f64, f64)], half: f64) {
    for w in pts.windows(2) {
        let ((r0, c0), (r1, c1)) = (w[0], w[1]);
        let steps = ((r1 - r0).abs().max((c1 - c0).abs()) * 4.0).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            stamp(img, r0 + t * (r1 - r0), c0 + t * (c1 - c0), half);
        }
    }
}

fn ring(img: &mut BinaryImage, center: (f64, f64), radius: f64, half: f64) {
    for r in 0..img.height() {
        for c in 0..img.width() {
            let d = ((r as f64 - center.0).powi(2) + (c as f64 - center.1).powi(2)).sqrt();
            if (d - radius).abs() <= half {
                img.set(r, c, true);
            }
        }
    }
}

fn random_blob(rng: &mut ChaCha8Rng, size: usize) -> BinaryImage {
    let mut img = BinaryImage::new(size, size);
    let s = size as f64;
    for _ in 0..rng.gen_range(1..=4) {
        let half = rng.gen_range(0.5..3.0);
        match rng.gen_range(0..3) {
            0 => {
                let pts: Vec<(f64, f64)> = (0..rng.gen_range(2..5))
                    .map(|_| (rng.gen_range(4.0..s - 4.0), rng.gen_range(4.0..s - 4.0)))
                    .collect();
                polyline(&mut img, &pts, half);
            }
            1 => {
                let center = (rng.gen_range(10.0..s - 10.0), rng.gen_range(10.0..s - 10.0));
                ring(&mut img, center, rng.gen_range(3.0..8.0), half);
            }
            _ => stamp(&mut img, rng.gen_range(5.0..s - 5.0), rng.gen_range(5.0..s - 5.0), half * 2.0),
        }
    }
    img
}

/// Random letter sequence of length `n` that is a single sub-word.
fn random_subword(rng: &mut ChaCha8Rng, n: usize) -> SubWordSpec {
    let joining: Vec<char> = ALPHABET.iter().filter(|l| l.1).map(|l| l.0).collect();
    (0..n)
        .map(|k| {
            let letter = if k + 1 < n {
                joining[rng.gen_range(0..joining.len())]
            } else {
                ALPHABET[rng.gen_range(0..ALPHABET.len())].0
            };
            (letter, implied_form(k, n))
        })
        .collect()
}

fn page_spec(rows: Vec<RowSpec>, seed: u64) -> RenderSpec {
    RenderSpec {
        rows,
        stroke_width: 3,
        scale: 1.0,
        seed,
        ..RenderSpec::default()
    }
}

fn gray(img: &BinaryImage, margin: usize) -> GrayImage {
    pad(img, margin).to_gray()
}

fn align(truth: &BBox, preds: &[&RecognizedSubWord]) -> Option<String> {
    preds
        .iter()
        .filter_map(|p| p.bbox.map(|b| (b.iou(truth), p)))
        .filter(|(iou, _)| *iou >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p.text())
}

// ---- criteria ----

#[test]
fn c01_readme_states_non_reproducibility() {
    let readme = std::fs::read_to_string(repo().join("README.md")).unwrap_or_default();
    let lower = readme.to_lowercase();
    let ok = readme.contains("97.06%") && lower.contains("not reproducible");
    report(1, "README non-reproducibility statement", ok, format!("{} bytes", readme.len()));
}

#[test]
fn c02_civ_round_trip() {
    let start = Instant::now();
    let (total, failures) = common::round_trip_failures();
    let elapsed = start.elapsed();
    let known = common::known_failures();
    let passed = total - failures.len();
    let explained = failures.iter().all(|f| known.get(f).is_some_and(|c| !c.is_empty()));
    let ok = total == 114 && passed * 100 >= total * 95 && explained && elapsed < Duration::from_secs(30);
    let detail = format!(
        "{passed}/{total} ({:.2}%), failures explained: {explained}, {:.1}s",
        100.0 * passed as f64 / total as f64,
        elapsed.as_secs_f64()
    );
    report(2, "template round trip", ok, detail);
}

#[test]
fn c03_primitives_recovered() {
    use PrimitiveCode::*;
    let cases: Vec<(PrimitiveCode, BinaryImage)> = [H, V, S, B, L, U, C, O]
        .into_iter()
        .map(|code| {
            let mut img = BinaryImage::new(44, 44);
            let half = 1.0;
            match code {
                H => polyline(&mut img, &[(20.0, 6.0), (20.0, 36.0)], half),
                V => polyline(&mut img, &[(6.0, 20.0), (36.0, 20.0)], half),
                S => polyline(&mut img, &[(36.0, 6.0), (6.0, 36.0)], half),
                B => polyline(&mut img, &[(6.0, 6.0), (36.0, 36.0)], half),
                L => polyline(&mut img, &[(6.0, 8.0), (34.0, 8.0), (34.0, 34.0)], half),
                U => polyline(&mut img, &[(6.0, 8.0), (34.0, 8.0), (34.0, 34.0), (6.0, 34.0)], half),
                C => polyline(&mut img, &[(8.0, 34.0), (8.0, 8.0), (34.0, 8.0), (34.0, 34.0)], half),
                O => ring(&mut img, (21.0, 21.0), 11.0, 1.5),
            }
            (code, img)
        })
        .collect();
    let cfg = FitConfig::default();
    let mut recovered = 0;
    let mut got_all = Vec::new();
    for (code, img) in &cases {
        let comp = Component::from_pixels(img.ink_pixels());
        let sk = Skeleton::of_component(&comp);
        let graph = skeleton::prune_spurs(&skeleton::build_graph(&sk), 2);
        let (curves, rest) = skeleton::detect_closed_curves(&graph);
        let mut got: Vec<PrimitiveCode> = curves.iter().map(|_| O).collect();
        for stroke in skeleton::extract_strokes(&rest, 2) {
            got.extend(stroke_to_primitives(&stroke.path, &cfg).unwrap_or_default().iter().map(|p| p.code));
        }
        if got == [*code] {
            recovered += 1;
        }
        got_all.push(format!("{code}->{}", got.iter().map(|c| c.to_string()).collect::<String>()));
    }
    report(3, "primitives recovered", recovered == 8, format!("{recovered}/8 [{}]", got_all.join(" ")));
}

#[test]
fn c04_hough_exactness() {
    let cfg = FitConfig::default();
    let mut exact = 0;
    let mut detail = Vec::new();
    for angle in QuantAngle::all() {
        let rad = angle.degrees().to_radians();
        let (dx, dy) = (rad.cos(), rad.sin());
        let step = dx.abs().max(dy.abs());
        let len = 20;
        let path: Vec<(usize, usize)> = (0..len)
            .map(|k| {
                let t = k as f64 / step;
                ((40.0 - t * dy).round() as usize, (40.0 + t * dx).round() as usize)
            })
            .collect();
        let segs = fit_lines(&path, &cfg).unwrap_or_default();
        let ok = segs.len() == 1 && segs[0].angle == angle && segs[0].support == len;
        exact += ok as usize;
        detail.push(format!("{}:{}", angle, if ok { "ok" } else { "miss" }));
    }
    report(4, "Hough exactness", exact == 8, format!("{exact}/8 [{}]", detail.join(" ")));
}

fn thinning_holds(img: &BinaryImage) -> Result<(), String> {
    let t = thin(img);
    if t.ink_pixels().iter().any(|&(r, c)| !img.get(r, c)) {
        return Err("skeleton leaves the shape".into());
    }
    let (a, b) = (flood_components(img, true, &N8).len(), flood_components(&t, true, &N8).len());
    if a != b {
        return Err(format!("components {a} -> {b}"));
    }
    let (a, b) = (holes(img), holes(&t));
    if a != b {
        return Err(format!("holes {a} -> {b}"));
    }
    if has_square(&t) {
        return Err("2x2 block left".into());
    }
    if thin(&t) != t {
        return Err("not idempotent".into());
    }
    Ok(())
}

#[test]
fn c05_thinning_invariants() {
    let db = db();
    let mut fixtures: Vec<(String, BinaryImage)> = Vec::new();
    let mut bar = BinaryImage::new(30, 12);
    polyline(&mut bar, &[(6.0, 3.0), (6.0, 26.0)], 2.0);
    fixtures.push(("bar".into(), bar));
    let mut plus = BinaryImage::new(30, 30);
    polyline(&mut plus, &[(15.0, 3.0), (15.0, 26.0)], 1.5);
    polyline(&mut plus, &[(3.0, 15.0), (26.0, 15.0)], 1.5);
    fixtures.push(("plus".into(), plus));
    let mut r = BinaryImage::new(30, 30);
    ring(&mut r, (15.0, 15.0), 9.0, 2.0);
    fixtures.push(("ring".into(), r));
    for civ in db.records.iter().step_by(7) {
        let img = render_letter(civ, Pen { stroke_width: 3, scale: 1.0 }).image;
        fixtures.push((civ.to_line(), pad(&img, 2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..500 {
        fixtures.push((format!("blob {i}"), random_blob(&mut rng, 40)));
    }
    let failures: Vec<String> = fixtures
        .iter()
        .filter_map(|(name, img)| thinning_holds(img).err().map(|e| format!("{name}: {e}")))
        .collect();
    let detail = format!("{} shapes, {} violations {:?}", fixtures.len(), failures.len(), failures.iter().take(3).collect::<Vec<_>>());
    report(5, "thinning invariants", failures.is_empty(), detail);
}

#[test]
fn c06_components_match_flood_fill() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut agree = 0;
    for _ in 0..200 {
        let p = rng.gen_range(0.05..0.7);
        let mask: Vec<bool> = (0..64 * 64).map(|_| rng.gen_bool(p)).collect();
        let img = BinaryImage::from_mask(64, 64, mask);
        let mut ours: Vec<Vec<(usize, usize)>> = connected_components(&img)
            .into_iter()
            .map(|c| {
                let mut px = c.pixels;
                px.sort_unstable();
                px
            })
            .collect();
        ours.sort();
        agree += (ours == flood_components(&img, true, &N8)) as usize;
    }
    report(6, "connected components vs flood fill", agree == 200, format!("{agree}/200 images"));
}

#[test]
fn c07_closed_curves_equal_cycle_rank() {
    let db = db();
    let mut shapes: Vec<(String, BinaryImage, usize)> = Vec::new();
    for (i, radius) in [6.0, 9.0, 14.0].into_iter().enumerate() {
        let mut img = BinaryImage::new(40, 40);
        ring(&mut img, (20.0, 20.0), radius, 1.5);
        shapes.push((format!("ring {i}"), img, 1));
    }
    let mut eight = BinaryImage::new(30, 50);
    ring(&mut eight, (14.0, 15.0), 9.0, 1.5);
    ring(&mut eight, (33.0, 15.0), 9.0, 1.5);
    shapes.push(("figure-eight".into(), eight, 2));
    for letter in ['و', 'ه', 'ف'] {
        let civ = db.find(letter, Form::Separate).unwrap();
        let img = render_letter(civ, Pen { stroke_width: 3, scale: 1.0 }).image;
        shapes.push((format!("{letter}"), pad(&img, 2), 1));
    }
    let mut agree = 0;
    let mut detail = Vec::new();
    for (name, img, expected) in &shapes {
        let body = connected_components(img).into_iter().max_by_key(|c| c.area()).unwrap();
        let sk = Skeleton::of_component(&body);
        let graph = skeleton::prune_spurs(&skeleton::build_graph(&sk), 2);
        let (curves, _) = skeleton::detect_closed_curves(&graph);
        let rank = cycle_rank(&sk.image);
        let ok = curves.len() == rank && rank == *expected;
        agree += ok as usize;
        detail.push(format!("{name}:{}/{rank}", curves.len()));
    }
    report(7, "closed curves equal cycle rank", agree == shapes.len(), format!("{agree}/{} [{}]", shapes.len(), detail.join(" ")));
}

#[test]
fn c08_baseline_within_one() {
    let db = db();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pcfg = PreprocessConfig::default();
    let cfg = Config::default();
    let (mut rows_seen, mut within) = (0, 0);
    let mut worst = 0usize;
    for page in 0..10 {
        let rows = (0..5)
            .map(|_| {
                (0..4)
                    .map(|_| (0..rng.gen_range(1..=2)).map(|_| { let n = rng.gen_range(1..=4); random_subword(&mut rng, n) }).collect())
                    .collect()
            })
            .collect();
        let (img, truth) = render_page(&page_spec(rows, page), &db).unwrap();
        let bin = preprocess::median_filter(&preprocess::binarize(&img, &pcfg));
        let pen = preprocess::estimate_pen_with(&bin, pcfg.pen_statistic).unwrap();
        let bands = segment::split_rows(&bin, cfg.band_merge_factor, cfg.band_merge_pens * pen);
        for (k, t) in truth.rows.iter().enumerate() {
            rows_seen += 1;
            if bands.len() != truth.rows.len() {
                continue;
            }
            let (top, bottom) = bands[k];
            if let Ok(b) = segment::detect_baseline(&bin, top, bottom) {
                let d = b.abs_diff(t.baseline);
                worst = worst.max(d);
                within += (d <= 1) as usize;
            }
        }
    }
    report(8, "baseline within one pixel", within == 50 && rows_seen == 50, format!("{within}/{rows_seen} rows, worst offset {worst}"));
}

#[test]
fn c09_dot_count_separates_letters() {
    let db = db();
    let cfg = Config::default();
    let recognize_one = |img: &BinaryImage| -> Vec<(char, Form)> {
        let result = recognize_page(&gray(img, 24), &db, &cfg, 1, false).unwrap();
        result.rows.iter().flatten().flat_map(|s| s.letters.iter().map(|l| (l.letter, l.form))).collect()
    };
    let be = db.find('ب', Form::Separate).unwrap();
    let mut by_dots = Vec::new();
    for above in 1..=3 {
        let mut civ = be.clone();
        civ.dots_above = above;
        civ.dots_below = 0;
        by_dots.push(recognize_one(&render_letter(&civ, Pen { stroke_width: 3, scale: 1.0 }).image));
    }
    let distinct: BTreeSet<_> = by_dots.iter().filter(|g| g.len() == 1).map(|g| g[0].0).collect();
    let named: Vec<_> = ['ب', 'ت', 'ث']
        .iter()
        .map(|&l| recognize_one(&render_letter(db.find(l, Form::Separate).unwrap(), Pen { stroke_width: 3, scale: 1.0 }).image))
        .collect();
    let named_ok = named.iter().zip(['ب', 'ت', 'ث']).all(|(g, l)| g.as_slice() == [(l, Form::Separate)]);
    let ok = distinct.len() == 3 && named_ok;
    let detail = format!(
        "dots above 1,2,3 -> {:?}; ب/ت/ث -> {:?}",
        by_dots.iter().map(|g| g.iter().map(|x| x.0).collect::<String>()).collect::<Vec<_>>(),
        named.iter().map(|g| g.iter().map(|x| x.0).collect::<String>()).collect::<Vec<_>>()
    );
    report(9, "be skeleton with 1/2/3 dots gives 3 letters", ok, detail);
}

#[test]
fn c10_light_noise_agrees_with_clean() {
    let db = db();
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut total, mut agree) = (0, 0);
    for page in 0..2 {
        let rows: Vec<RowSpec> = (0..5)
            .map(|_| (0..5).map(|_| { let n = rng.gen_range(1..=3); vec![random_subword(&mut rng, n)] }).collect())
            .collect();
        let clean = page_spec(rows, 100 + page);
        let noisy = RenderSpec { noise_p: 0.005, ..clean.clone() };
        let (clean_img, truth) = render_page(&clean, &db).unwrap();
        let (noisy_img, _) = render_page(&noisy, &db).unwrap();
        let a = recognize_page(&clean_img, &db, &cfg, 1, false).unwrap();
        let b = recognize_page(&noisy_img, &db, &cfg, 1, false).unwrap();
        let pa: Vec<&RecognizedSubWord> = a.rows.iter().flatten().collect();
        let pb: Vec<&RecognizedSubWord> = b.rows.iter().flatten().collect();
        for sw in truth.rows.iter().flat_map(|r| &r.subwords) {
            total += 1;
            agree += (align(&sw.bbox, &pa) == align(&sw.bbox, &pb)) as usize;
        }
    }
    let ok = total == 50 && agree * 100 >= total * 95;
    report(10, "noise 0.005 agrees with clean run", ok, format!("{agree}/{total} sub-words"));
}

#[test]
fn c11_precision_falls_with_length() {
    let db = db();
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let per_length = 60;
    let mut subwords: Vec<SubWordSpec> = Vec::new();
    for _ in 0..per_length {
        for n in 1..=5 {
            subwords.push(random_subword(&mut rng, n));
        }
    }
    let mut merged = EvalReport::default();
    for (page, chunk) in subwords.chunks(20).enumerate() {
        let rows = chunk.chunks(5).map(|row| row.iter().map(|sw| vec![sw.clone()]).collect()).collect();
        let (img, truth) = render_page(&page_spec(rows, page as u64), &db).unwrap();
        let result = recognize_page(&img, &db, &cfg, 1, false).unwrap();
        merged.merge(&evaluate(&result.rows, &truth));
    }
    let p: Vec<f64> = (0..5).map(|b| merged.precision(b)).collect();
    let ok = p.windows(2).all(|w| w[0] >= w[1]);
    let detail = format!("precision by length 1..5: {}", p.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" "));
    report(11, "bucket precision non-increasing", ok, detail);
}

#[test]
fn c12_jobs_do_not_change_output() {
    let pages = repo().join("samples/pages");
    let run = |jobs: &str, args: &[&Path]| {
        let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_primocr"));
        cmd.args(["--jobs", jobs]);
        cmd.args(args);
        cmd.output().unwrap()
    };
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&pages)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    entries.sort();
    let mut identical = 0;
    for page in &entries {
        let a = run("1", &[Path::new("recognize"), page]);
        let b = run("8", &[Path::new("recognize"), page]);
        identical += (a.status.success() && a.stdout == b.stdout) as usize;
    }
    let a = run("1", &[Path::new("eval"), &pages]);
    let b = run("8", &[Path::new("eval"), &pages]);
    let eval_same = a.status.success() && a.stdout == b.stdout;
    let ok = !entries.is_empty() && identical == entries.len() && eval_same;
    report(12, "--jobs 1 and --jobs 8 byte-identical", ok, format!("{identical}/{} pages, eval identical: {eval_same}", entries.len()));
}

