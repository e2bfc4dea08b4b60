use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use qdelta::arch::DeltaKernel;
use qdelta::expsums::crt_split;
use qdelta::localdens::singular_series;
use qdelta::pipeline::{compare, enumerate_gamma_with, poisson_rhs, s_tilde_box, Strategy, Truncation};
use qdelta::qform::classify_c;
use serde::Serialize;

use crate::schema::{self, Schema};
use crate::{CliError, CliResult, RunConfig};

fn create(run: &RunConfig, name: &str) -> CliResult<BufWriter<File>> {
    std::fs::create_dir_all(&run.out_dir)?;
    Ok(BufWriter::new(File::create(run.out_dir.join(name))?))
}

fn write_echo(run: &RunConfig) -> CliResult<()> {
    let mut f = create(run, "config_echo.txt")?;
    write!(f, "# sha256 {}\n{}", run.hash(), run.config.echo())?;
    Ok(f.flush()?)
}

fn write_json<T: Serialize>(run: &RunConfig, name: &str, value: &T) -> CliResult<()> {
    let mut f = create(run, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(f.flush()?)
}

fn csv_writer(run: &RunConfig, schema: &Schema) -> CliResult<csv::Writer<BufWriter<File>>> {
    let mut w = csv::Writer::from_writer(create(run, &format!("{}.csv", schema.name))?);
    w.write_record(schema.header())?;
    Ok(w)
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: String,
    #[serde(flatten)]
    body: &'a T,
}

fn stamped<'a, T: Serialize>(run: &RunConfig, body: &'a T) -> Stamped<'a, T> {
    Stamped { config_hash: run.hash(), body }
}

pub fn cmd_count(run: &RunConfig) -> CliResult<()> {
    let inst = run.config.instance()?;
    let strategy = match run.config.raw("count.strategy").unwrap_or("sliced") {
        "sliced" => Strategy::Sliced,
        "triple" => Strategy::TripleLoop,
        other => return Err(qdelta::Error::Config(format!("`count.strategy`: unknown `{other}`")).into()),
    };
    write_echo(run)?;
    let mut result = enumerate_gamma_with(&inst, strategy)?;
    if run.deterministic {
        result.seconds = 0.0;
    }
    #[derive(Serialize)]
    struct Body<'a> {
        instance: &'a qdelta::ProblemInstance,
        result: &'a qdelta::pipeline::EnumerationResult,
    }
    write_json(run, "count.json", &stamped(run, &Body { instance: &inst, result: &result }))
}

pub fn cmd_expsum(run: &RunConfig) -> CliResult<()> {
    let cfg = &run.config;
    let inst = cfg.instance()?;
    let q_min: u64 = cfg.get_or("expsum.q_min", 1)?;
    let q_max: u64 = cfg.get_or("expsum.q_max", 50)?;
    let c_max: usize = cfg.get_or("expsum.c_max", 0)?;
    if q_min == 0 || q_min > q_max {
        return Err(qdelta::Error::Config(format!("expsum q range {q_min}..{q_max} is empty")).into());
    }
    write_echo(run)?;
    let mut w = csv_writer(run, &schema::EXPSUM)?;
    let cm = c_max as i64;
    for q in q_min..=q_max {
        let (q1, q2) = crt_split(&inst, q);
        let values = s_tilde_box(&inst, q, c_max)?;
        let mut idx = 0;
        for c1 in -cm..=cm {
            for c2 in -cm..=cm {
                for c3 in -cm..=cm {
                    let v = values[idx];
                    idx += 1;
                    let class = classify_c(&inst.form, inst.m0, [c1 as i128, c2 as i128, c3 as i128]);
                    w.write_record([
                        q.to_string(),
                        q1.to_string(),
                        q2.to_string(),
                        c1.to_string(),
                        c2.to_string(),
                        c3.to_string(),
                        v.re.to_string(),
                        v.im.to_string(),
                        v.norm().to_string(),
                        class.tag().to_string(),
                    ])?;
                }
            }
        }
    }
    Ok(w.flush()?)
}

pub fn cmd_density(run: &RunConfig) -> CliResult<()> {
    let inst = run.config.instance()?;
    let p_max: u64 = run.config.get_or("density.p_max", 100)?;
    write_echo(run)?;
    let series = singular_series(&inst, p_max)?;
    let mut w = csv_writer(run, &schema::DENSITY)?;
    for f in &series.factors {
        let d = &f.density;
        w.write_record([
            f.p.to_string(),
            f.psi.to_string(),
            d.k_star.to_string(),
            d.count.to_string(),
            d.numerator.to_string(),
            d.denominator.to_string(),
            d.value.to_string(),
            f.factor.to_string(),
        ])?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct Summary {
        p_max: u64,
        value: f64,
        drift: f64,
        square: bool,
        obstructed: bool,
    }
    let summary =
        Summary { p_max, value: series.value, drift: series.drift, square: series.square, obstructed: series.obstructed() };
    write_json(run, "density.json", &stamped(run, &summary))
}

pub fn cmd_delta_check(run: &RunConfig) -> CliResult<()> {
    let cfg = &run.config;
    let qs: Vec<f64> = cfg.get_vec("delta.q")?.unwrap_or_else(|| vec![5.0, 10.0]);
    let n_min: i128 = cfg.get_or("delta.n_min", -25)?;
    let n_max: i128 = cfg.get_or("delta.n_max", 25)?;
    let exact = match cfg.raw("delta.c_q").unwrap_or("one") {
        "one" => false,
        "exact" => true,
        other => return Err(qdelta::Error::Config(format!("`delta.c_q`: unknown `{other}`")).into()),
    };
    write_echo(run)?;
    let mut w = csv_writer(run, &schema::DELTA_CHECK)?;
    for &q in &qs {
        let kernel = DeltaKernel::new(q)?;
        let q_max = kernel.min_q_max(n_min.abs().max(n_max.abs()));
        for n in n_min..=n_max {
            let value = if exact { kernel.delta_symbol_exact(n, q_max)? } else { kernel.delta_symbol(n, q_max)? };
            let deviation = (value - (n == 0) as i32 as f64).abs();
            w.write_record([n.to_string(), q.to_string(), value.to_string(), deviation.to_string()])?;
        }
    }
    Ok(w.flush()?)
}

#[derive(Serialize)]
struct PoissonCheck {
    h: u32,
    gamma: f64,
    rhs: qdelta::pipeline::DeltaExpansion,
    deviation: f64,
    allowed: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CompareBody {
    report: qdelta::pipeline::PredictionReport,
    poisson: Vec<PoissonCheck>,
    ratio_failures: Vec<u32>,
    pass: bool,
}

pub fn cmd_compare(run: &RunConfig) -> CliResult<()> {
    let cfg = &run.config;
    let inst = cfg.instance()?;
    let h_min: u32 = cfg.get_or("compare.h_min", 1)?;
    let h_max: u32 = cfg.get_or("compare.h_max", inst.h)?;
    let p_max: u64 = cfg.get_or("compare.p_max", 1000)?;
    let poisson_n_max: i128 = cfg.get_or("compare.poisson_n_max", 400)?;
    let tolerance: f64 = cfg.get_or("tolerance.poisson", 0.02)?;
    let ratio: Option<[f64; 2]> = cfg.get_array("tolerance.ratio")?;
    let quad = cfg.quadrature()?;
    if h_min > h_max {
        return Err(qdelta::Error::Config(format!("compare h range {h_min}..{h_max} is empty")).into());
    }
    write_echo(run)?;
    let hs: Vec<u32> = (h_min..=h_max).collect();
    let report = compare(&inst, &hs, p_max)?;

    let mut poisson = Vec::new();
    for row in &report.rows {
        let at = inst.with_h(row.h)?;
        if at.n_big() > poisson_n_max {
            continue;
        }
        let mut trunc = Truncation::default_for(&at);
        trunc.quad = quad;
        trunc.c_max = cfg.get_or("poisson.c_max", trunc.c_max)?;
        trunc.q_max = cfg.get_or("poisson.q_max", trunc.q_max)?;
        let rhs = poisson_rhs(&at, &trunc)?;
        let gamma = row.gamma.unwrap_or(0.0);
        let deviation = (rhs.total.re - gamma).abs();
        let allowed = tolerance * gamma.max(at.sqrt_n());
        poisson.push(PoissonCheck { h: row.h, gamma, rhs, deviation, allowed, pass: deviation <= allowed });
    }
    let mut ratio_failures = Vec::new();
    if let (Some([lo, hi]), false) = (ratio, report.obstructed) {
        for row in &report.rows {
            let r = row.gamma.unwrap_or(0.0) / row.main[0];
            if !(lo..=hi).contains(&r) {
                ratio_failures.push(row.h);
            }
        }
    }

    let mut w = csv_writer(run, &schema::COMPARE)?;
    for row in &report.rows {
        let gamma = row.gamma.unwrap_or(0.0);
        for (i, cand) in report.candidates.iter().enumerate() {
            w.write_record([
                row.h.to_string(),
                row.n_big.to_string(),
                row.sqrt_n.to_string(),
                gamma.to_string(),
                cand.label.to_string(),
                row.main[i].to_string(),
                ((gamma - row.main[i]) / row.sqrt_n).to_string(),
            ])?;
        }
    }
    w.flush()?;

    let pass = poisson.iter().all(|p| p.pass) && ratio_failures.is_empty();
    let body = CompareBody { report, poisson, ratio_failures, pass };
    write_json(run, "report.json", &stamped(run, &body))?;
    if !pass {
        return Err(CliError::Tolerance(format!("see {}", run.out_dir.join("report.json").display())));
    }
    Ok(())
}

/// Runs the schema check over every known CSV table in `dir`.
pub fn check_dir(dir: &Path) -> CliResult<Vec<(String, usize)>> {
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for path in entries {
        if let Some(schema) = schema::for_file(&path) {
            let rows = schema.validate(File::open(&path)?)?;
            out.push((path.display().to_string(), rows));
        }
    }
    Ok(out)
}
