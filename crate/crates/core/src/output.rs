//! Result tables and run artifacts.
//!
//! One CSV and one text table is written per (α, scheme). Values are
//! reported in units of `10⁻³` per unit notional; every CSV starts with
//! `#` metadata lines carrying the config hash and the run settings.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::scenario::{Scenario, ScenarioError};
use crate::xva::{AdjustmentReport, Quantity, XvaModel};

/// Reported values are multiplied by this factor.
pub const UNIT_SCALE: f64 = 1e3;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub n_paths: u64,
    pub seed: u64,
    /// Also write the rating trajectories of this many paths.
    pub dump_paths: Option<u64>,
}

impl RunOptions {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self { n_paths: s.n_paths, seed: s.seed, dump_paths: None }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// All reports, α-major then scheme then trigger pair.
    pub reports: Vec<AdjustmentReport>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_owned(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn alpha_tag(alpha: f64) -> String {
    format!("{alpha}").replace('.', "p")
}

/// Runs every α of the scenario and writes tables into `out_dir`.
pub fn run_grid(scenario: &Scenario, out_dir: &Path, opts: RunOptions) -> Result<RunSummary, OutputError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut files = Vec::new();
    let mut all = Vec::new();
    for &alpha in &scenario.alphas {
        let model = scenario.model(alpha)?;
        let reports = model.estimate(opts.n_paths, opts.seed).map_err(ScenarioError::from)?;
        for spec in &scenario.collateral {
            let name = spec.scheme.name();
            let rows: Vec<&AdjustmentReport> = reports.iter().filter(|r| r.scheme == name).collect();
            let stem = format!("{}_alpha{}_{}", scenario.instrument.name(), alpha_tag(alpha), name);
            let csv_path = out_dir.join(format!("{stem}.csv"));
            write_csv(&csv_path, scenario, &model, &rows)?;
            let txt_path = out_dir.join(format!("{stem}.txt"));
            let mut w = create(&txt_path)?;
            write_text_table(&mut w, scenario, alpha, name, &rows).map_err(io_err(&txt_path))?;
            w.flush().map_err(io_err(&txt_path))?;
            files.push(csv_path);
            files.push(txt_path);
        }
        if let Some(n) = opts.dump_paths {
            let path = out_dir.join(format!("{}_alpha{}_paths.csv", scenario.instrument.name(), alpha_tag(alpha)));
            dump_paths(&path, &model, n.min(opts.n_paths), opts.seed)?;
            files.push(path);
        }
        all.extend(reports);
    }
    Ok(RunSummary { files, reports: all })
}

fn metadata_lines(scenario: &Scenario, model: &XvaModel, rows: &[&AdjustmentReport]) -> Vec<String> {
    let mut out = vec![
        format!("# config_sha256 = {}", scenario.config_hash),
        format!("# instrument = {}", scenario.instrument.name()),
    ];
    match &model.inputs().instrument {
        crate::instruments::Instrument::Irs(p) => out.push(format!("# fixed_rate = {}", p.fixed_rate())),
        crate::instruments::Instrument::Cds(p) => out.push(format!("# spread = {}", p.spread())),
    }
    let r = scenario.rates;
    out.push(format!(
        "# vasicek r0 = {}, speed = {}, level = {}, sigma = {}, long_run_mean = {}",
        r.r0,
        r.speed,
        r.level,
        r.sigma,
        r.long_run_mean()
    ));
    let errors: Vec<String> = scenario.embeddings.iter().map(|e| format!("{:e}", e.reproduction_error)).collect();
    out.push(format!("# embedding_errors = {}", errors.join(" ")));
    if let Some(first) = rows.first() {
        out.push(format!("# alpha = {}", first.alpha));
        out.push(format!("# scheme = {}", first.scheme));
        out.push(format!("# seed = {}, n_paths = {}", first.seed, first.n_paths));
    }
    out.push("# units = 1e-3 per unit notional".to_string());
    out
}

fn write_csv(path: &Path, scenario: &Scenario, model: &XvaModel, rows: &[&AdjustmentReport]) -> Result<(), OutputError> {
    let mut file = create(path)?;
    for line in metadata_lines(scenario, model, rows) {
        writeln!(file, "{line}").map_err(io_err(path))?;
    }
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["scheme".to_string(), "alpha".into(), "k1".into(), "k2".into(), "seed".into(), "n_paths".into()];
    for q in Quantity::ALL {
        header.push(q.name().to_string());
        header.push(format!("{}_se", q.name()));
    }
    header.push("mitigation_pct".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.scheme.clone(),
            r.alpha.to_string(),
            scenario.scale.label(r.k1),
            scenario.scale.label(r.k2),
            r.seed.to_string(),
            r.n_paths.to_string(),
        ];
        for q in Quantity::ALL {
            let e = r.get(q);
            rec.push((e.value * UNIT_SCALE).to_string());
            rec.push((e.se * UNIT_SCALE).to_string());
        }
        rec.push(r.mitigation_pct.map(|m| m.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

const TABLE_COLUMNS: [Quantity; 6] =
    [Quantity::Urva, Quantity::Drva, Quantity::Rva, Quantity::UcvaR, Quantity::DvaR, Quantity::CvaR];

/// Fixed-width table with the rating-valuation columns and the
/// mitigation percentage.
pub fn write_text_table<W: Write>(
    w: &mut W,
    scenario: &Scenario,
    alpha: f64,
    scheme: &str,
    rows: &[&AdjustmentReport],
) -> io::Result<()> {
    let n = rows.first().map_or(0, |r| r.n_paths);
    writeln!(
        w,
        "{} alpha = {alpha} collateral = {scheme} paths = {n} (values x 1e-3)",
        scenario.instrument.name().to_uppercase()
    )?;
    write!(w, "{:>3} {:>3}", "K1", "K2")?;
    for q in TABLE_COLUMNS {
        write!(w, " {:>12}", q.name())?;
    }
    writeln!(w, " {:>10}", "mitig %")?;
    for r in rows {
        write!(w, "{:>3} {:>3}", scenario.scale.label(r.k1), scenario.scale.label(r.k2))?;
        for q in TABLE_COLUMNS {
            write!(w, " {:>12.5}", r.get(q).value * UNIT_SCALE)?;
        }
        match r.mitigation_pct {
            Some(m) => writeln!(w, " {m:>10.2}")?,
            None => writeln!(w, " {:>10}", "-")?,
        }
    }
    Ok(())
}

/// Writes `path_id,time,state,<categories>` for the first `n` paths,
/// including the initial state at time 0.
pub fn dump_paths(path: &Path, model: &XvaModel, n: u64, seed: u64) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let n_comp = model.inputs().generator.n_components();
    let mut header = vec!["path_id".to_string(), "time".into(), "state".into()];
    header.extend((1..=n_comp).map(|c| format!("rating{c}")));
    w.write_record(&header)?;
    for i in 0..n {
        let p = model.rating_path(seed, i);
        let rows = std::iter::once((0.0, p.initial)).chain(p.jumps.iter().map(|j| (j.time, j.state)));
        for (t, s) in rows {
            let mut rec = vec![i.to_string(), t.to_string(), s.to_string()];
            rec.extend(p.categories(s).iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}
