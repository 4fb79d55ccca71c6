use clap::{Parser, Subcommand};
use primocr::harness::{evaluate, render_page, EvalReport, GroundTruth, RenderSpec};
use primocr::pipeline::{recognize_page, Config};
use primocr::raster::{load_pgm, save_pgm, BinaryImage};
use primocr::recognize::{load_civ_db, CivDatabase};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const BUILTIN_CIV: &[u8] = include_bytes!("../../data/civ.txt");

#[derive(Parser)]
#[command(name = "primocr", version, about = "Structural OCR for printed Persian text")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Character template file; defaults to the built-in table.
    #[arg(long, global = true)]
    civ: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Recognize a PGM page and print its text.
    Recognize {
        input: PathBuf,
        /// Write intermediate stage images here.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Render a page spec to `<prefix>.pgm` and `<prefix>.truth`.
    Render {
        spec: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Score every `<name>.pgm` / `<name>.truth` pair in a directory.
    Eval { dir: PathBuf },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = String::from_utf8(read(path)?).map_err(|_| Failure(format!("{}: not UTF-8", path.display())))?;
            Config::parse(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    if let Some(civ) = &cli.civ {
        cfg.civ_db_path = Some(civ.clone());
    }
    if let Some(Command::Recognize {
        dump_dir: Some(d), ..
    }) = &cli.command
    {
        cfg.dump_dir = Some(d.clone());
    }
    Ok(cfg)
}

fn load_db(cfg: &Config) -> Result<CivDatabase, Failure> {
    match &cfg.civ_db_path {
        Some(path) => load_civ_db(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display()))),
        None => Ok(load_civ_db(BUILTIN_CIV)?),
    }
}

fn dump(dir: &Path, name: &str, img: &BinaryImage) -> Result<(), Failure> {
    write(&dir.join(name), &save_pgm(&img.to_gray()))
}

fn recognize(cli: &Cli, cfg: &Config, input: &Path) -> Result<(), Failure> {
    let db = load_db(cfg)?;
    let page = load_pgm(&read(input)?).map_err(|e| Failure(format!("{}: {e}", input.display())))?;
    let result = recognize_page(&page, &db, cfg, cli.jobs, cfg.dump_dir.is_some())?;
    if let Some(dir) = &cfg.dump_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure(format!("{}: {e}", dir.display())))?;
        let s = &result.stages;
        for (name, img) in [
            ("binarized.pgm", &s.binarized),
            ("filtered.pgm", &s.filtered),
            ("normalized.pgm", &s.normalized),
        ] {
            if let Some(img) = img {
                dump(dir, name, img)?;
            }
        }
        for (i, img) in s.bands.iter().enumerate() {
            dump(dir, &format!("band_{i:03}.pgm"), img)?;
        }
        for (i, img) in s.skeletons.iter().enumerate() {
            dump(dir, &format!("skeleton_{i:03}.pgm"), img)?;
        }
    }
    if !result.text.is_empty() {
        println!("{}", result.text);
    }
    Ok(())
}

fn render(cfg: &Config, spec_path: &Path, out: &Path) -> Result<(), Failure> {
    let db = load_db(cfg)?;
    let text = String::from_utf8(read(spec_path)?).map_err(|_| Failure(format!("{}: not UTF-8", spec_path.display())))?;
    let spec = RenderSpec::parse(&text).map_err(|e| Failure(format!("{}: {e}", spec_path.display())))?;
    let (page, truth) = render_page(&spec, &db)?;
    write(&out.with_extension("pgm"), &save_pgm(&page))?;
    write(&out.with_extension("truth"), truth.to_sidecar().as_bytes())?;
    Ok(())
}

fn eval(cli: &Cli, cfg: &Config, dir: &Path) -> Result<(), Failure> {
    let db = load_db(cfg)?;
    let entries = std::fs::read_dir(dir).map_err(|e| Failure(format!("{}: {e}", dir.display())))?;
    let mut pages: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    pages.sort();
    let mut report = EvalReport::default();
    let mut scored = 0;
    for pgm in &pages {
        let truth_path = pgm.with_extension("truth");
        if !truth_path.exists() {
            continue;
        }
        let page = load_pgm(&read(pgm)?).map_err(|e| Failure(format!("{}: {e}", pgm.display())))?;
        let sidecar = String::from_utf8(read(&truth_path)?).unwrap_or_default();
        let truth = match GroundTruth::from_sidecar(&sidecar) {
            Ok(t) if fits(&t, page.width(), page.height()) => t,
            Ok(_) => {
                eprintln!("warning: {}: boxes outside the page, skipped", truth_path.display());
                continue;
            }
            Err(e) => {
                eprintln!("warning: {}: {e}, skipped", truth_path.display());
                continue;
            }
        };
        let result = recognize_page(&page, &db, cfg, cli.jobs, false)?;
        report.merge(&evaluate(&result.rows, &truth));
        scored += 1;
    }
    if scored == 0 {
        return Err(Failure(format!("{}: no page/truth pairs", dir.display())));
    }
    print!("{}", report.render());
    Ok(())
}

fn fits(t: &GroundTruth, width: usize, height: usize) -> bool {
    t.rows
        .iter()
        .flat_map(|r| &r.subwords)
        .all(|s| s.bbox.right < width && s.bbox.bottom < height)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.jobs == 0 {
        return Err(Failure("--jobs must be at least 1".into()));
    }
    let cfg = load_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.render());
        return Ok(());
    }
    match &cli.command {
        Some(Command::Recognize { input, .. }) => recognize(cli, &cfg, input),
        Some(Command::Render { spec, out }) => render(&cfg, spec, out),
        Some(Command::Eval { dir }) => eval(cli, &cfg, dir),
        None => Err(Failure("no command given; see --help".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
