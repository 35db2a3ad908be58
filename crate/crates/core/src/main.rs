use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use levylab::achieve;
use levylab::catalog::{self, Series, SeriesDef, Term};
use levylab::exactnum::{Rat, Vec2, Vec2f, Vec2q};
use levylab::extreme::{self, ExtremeSchedule, ExtremeSeries};
use levylab::levy::{self, EstimatorParams};
use levylab::raster::{self, RasterParams, Region};
use levylab::verify::{self, VerifyOptions};
use levylab::{Error, Result};

#[derive(Parser)]
#[command(name = "levylab", version, about = "Achievement sets of conditionally convergent planar series")]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Write the primary output to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SeriesArg {
    /// Catalog id, e.g. C8.
    #[arg(long)]
    series: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the catalog.
    Catalog,
    /// One term of a series.
    Term {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long)]
        n: u64,
    },
    /// Sum of the first n terms.
    PartialSum {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long)]
        n: u64,
    },
    /// Terms `from..=to` as CSV.
    DumpTerms {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long, default_value_t = 1)]
        from: u64,
        #[arg(long)]
        to: u64,
    },
    /// Estimate Levy directions from a finite prefix.
    LevyEstimate {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long = "horizon", default_value_t = levy::defaults::HORIZON)]
        horizon: u64,
        #[arg(long, default_value_t = levy::defaults::EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = levy::defaults::GRID)]
        grid: usize,
        #[arg(long, default_value_t = levy::defaults::THRESHOLD)]
        threshold: f64,
    },
    /// Staged certificate for a structured series.
    Achieve {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Absolutely convergent selection built from the catalog decompositions.
    AchieveAbs {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Number of stages.
        #[arg(long, default_value_t = 7)]
        depth: u32,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// One reduction step.
    ReductionWitness {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long)]
        epsilon: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = 1)]
        start: u64,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Exhaustive subsums of the first N terms near a target.
    Oracle {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long)]
        terms: u32,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, default_value = "0")]
        tol: String,
    },
    /// Build or verify the extreme construction.
    Extreme {
        #[command(subcommand)]
        action: ExtremeCmd,
    },
    /// Density raster of random subsums.
    Raster {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long, default_value_t = 30)]
        terms: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// x0,x1,y0,y1
        #[arg(long, default_value = "-1,1,-1,1", allow_hyphen_values = true)]
        region: String,
        /// WxH
        #[arg(long, default_value = "100x100")]
        resolution: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Greedy rearrangement toward a target.
    Rearrange {
        #[command(flatten)]
        s: SeriesArg,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, default_value_t = 4000)]
        steps: u64,
    },
    /// Run the acceptance suite.
    VerifyAll {
        /// Module name or criterion number.
        #[arg(long)]
        only: Option<String>,
        #[arg(long, hide = true)]
        inject_delta_fault: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Full schedule.
    Paper,
    Toy,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, value_enum, default_value = "paper")]
    kind: Kind,
    /// Number of blocks (full schedule: at most 3).
    #[arg(long)]
    levels: Option<u32>,
    /// Toy: δ of block 1, a power of two such as 1/4.
    #[arg(long, default_value = "1/4")]
    delta: String,
    /// Toy: comma-separated L:T pairs.
    #[arg(long, default_value = "4:9")]
    blocks: String,
}

#[derive(Subcommand)]
enum ExtremeCmd {
    Build(ScheduleArgs),
    Verify(ScheduleArgs),
}

/// Human summary for stderr plus the machine output.
struct Output {
    summary: String,
    value: Value,
    /// raw file payload for `--out`, when it is not the JSON value
    file: Option<Vec<u8>>,
}

fn out(summary: impl Into<String>, value: Value) -> Output {
    Output { summary: summary.into(), value, file: None }
}

fn series(s: &SeriesArg) -> Result<SeriesDef> {
    catalog::lookup(&s.series)
}

fn parse_target(s: &str) -> Result<Vec2q> {
    let (a, b) = s.split_once(',').ok_or_else(|| Error::Parse(format!("target must be x,y, got {s:?}")))?;
    Ok(Vec2::new(Rat::parse(a)?, Rat::parse(b)?))
}

fn term_json(t: &Term) -> Value {
    match t {
        Term::Exact(v) => json!({ "exact": true, "x": v.x, "y": v.y, "x_f64": v.x.to_f64(), "y_f64": v.y.to_f64() }),
        Term::Float(v) => json!({ "exact": false, "x": v.x, "y": v.y }),
    }
}

fn fmt_vec(v: Vec2f) -> String {
    format!("({}, {})", catalog::fmt_f64(v.x), catalog::fmt_f64(v.y))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn schedule(a: &ScheduleArgs) -> Result<(ExtremeSchedule, u32)> {
    match a.kind {
        Kind::Paper => Ok((ExtremeSchedule::Paper, a.levels.unwrap_or(extreme::MAX_FULL_LEVEL))),
        Kind::Toy => {
            let blocks: Vec<(u32, u32)> = a
                .blocks
                .split(',')
                .map(|p| {
                    let (l, t) = p.split_once(':').ok_or_else(|| Error::Parse(format!("block must be L:T, got {p:?}")))?;
                    let parse = |v: &str| v.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad block {p:?}")));
                    Ok((parse(l)?, parse(t)?))
                })
                .collect::<Result<_>>()?;
            let levels = a.levels.unwrap_or(blocks.len() as u32);
            Ok((ExtremeSchedule::toy(Rat::parse(&a.delta)?, &blocks)?, levels))
        }
    }
}

fn extreme_verify(s: &ExtremeSeries) -> Result<(bool, Value)> {
    let mut blocks = Vec::new();
    let mut pass = s.checks.iter().all(|c| c.per_term_bound && c.dominance && c.delta_decay != Some(false));
    for rec in &s.blocks {
        if !rec.is_enumerable() || rec.small_length().is_none_or(|l| l as usize > extreme::MAX_MIN_SUM_LEN) {
            blocks.push(json!({ "k": rec.k, "skipped": "block too long to enumerate" }));
            continue;
        }
        let v = s.block_view(rec.k)?;
        let m = extreme::brute_min_signed_sum(&v.x)?;
        let gap_ok = m.value == v.delta_next && !m.is_zero;
        let mut row = json!({
            "k": rec.k,
            "min_signed_sum": m.value,
            "witness": m.pattern,
            "delta_next": v.delta_next,
            "gap_matches": gap_ok,
        });
        pass &= gap_ok;
        if v.len() <= extreme::MAX_CLAIM_SWEEP_LEN {
            let sweep = extreme::check_block_claim_exhaustive(&v)?;
            pass &= sweep.violations == 0;
            row["claim"] = to_value(&sweep);
        }
        blocks.push(row);
    }
    let mut report = json!({ "checks": s.checks, "monotone_enumerable": s.monotone_enumerable, "blocks": blocks });
    if !s.leading_unit {
        let terms: usize = s.blocks.iter().filter_map(|b| b.small_length()).map(|l| l as usize).sum();
        if terms <= extreme::MAX_PROBE_TERMS {
            let probe = extreme::vertical_section_probe(s, s.blocks.len(), 1 << 24)?;
            pass &= probe.holds;
            report["vertical_sections"] = to_value(&probe);
        }
    }
    report["pass"] = json!(pass);
    Ok((pass, report))
}

fn run(cli: &Cli) -> Result<(Output, bool)> {
    let ok = |o: Output| Ok((o, true));
    match &cli.cmd {
        Cmd::Catalog => {
            let all = catalog::all();
            let lines: Vec<String> = all.iter().map(|d| format!("{}  {}", d.id, d.meta.source)).collect();
            let value = Value::Array(all.iter().map(|d| json!({ "id": d.id, "meta": d.meta })).collect());
            ok(out(lines.join("\n"), value))
        }
        Cmd::Term { s, n } => {
            let t = series(s)?.term(*n)?;
            ok(out(format!("term {n} = {}", fmt_vec(t.to_f64())), json!({ "n": n, "term": term_json(&t) })))
        }
        Cmd::PartialSum { s, n } => {
            let t = catalog::partial_sum(&series(s)?, *n)?;
            ok(out(format!("S_{n} = {}", fmt_vec(t.to_f64())), json!({ "n": n, "sum": term_json(&t) })))
        }
        Cmd::DumpTerms { s, from, to } => {
            let csv = catalog::dump_terms_csv(&series(s)?, *from, *to)?;
            let mut o = out(csv.clone(), json!({ "csv": csv }));
            o.file = Some(csv.into_bytes());
            ok(o)
        }
        Cmd::LevyEstimate { s, horizon, epsilon, grid, threshold } => {
            let p = EstimatorParams { horizon: *horizon, epsilon: *epsilon, grid: *grid, threshold: *threshold };
            let e = levy::estimate_levy_directions(&series(s)?, &p)?;
            let dirs = e.directions();
            let summary = format!(
                "{} cluster(s) at {:?} deg; closed coverage {}, open coverage {}",
                e.clusters.len(),
                e.clusters.iter().map(|c| (c.angle_deg * 100.0).round() / 100.0).collect::<Vec<_>>(),
                levy::half_circle_coverage(&dirs, false),
                levy::half_circle_coverage(&dirs, true)
            );
            let mut v = to_value(&e);
            v["closed_coverage"] = json!(levy::half_circle_coverage(&dirs, false));
            v["open_coverage"] = json!(levy::half_circle_coverage(&dirs, true));
            ok(out(summary, v))
        }
        Cmd::Achieve { s, target, depth, budget } => {
            let t = parse_target(target)?.to_f64();
            let c = achieve::achieve_via_reduction(&series(s)?, t, *depth, *budget)?;
            let summary = format!(
                "{} stages, {} terms, final error {} (bound 2^-{depth}); envelopes {}",
                c.stages.len(),
                c.final_selection.len(),
                c.final_error_inf,
                if c.holds { "hold" } else { "VIOLATED" }
            );
            Ok((out(summary, to_value(&c)), c.holds))
        }
        Cmd::AchieveAbs { s, target, depth, budget } => {
            let def = series(s)?;
            let decomps = catalog::decompositions(def.id);
            let t = parse_target(target)?.to_f64();
            let r = achieve::achieve_abs_plane(&def, &decomps, t, *depth, *budget)?;
            let summary = format!(
                "{} plan(s), {} terms, error {} (bound {})",
                r.plans.len(),
                r.selection.len(),
                r.error,
                r.bound
            );
            Ok((out(summary, to_value(&r)), r.within_bound))
        }
        Cmd::ReductionWitness { s, epsilon, x, start, budget } => {
            let (eps, x) = (Rat::parse(epsilon)?.to_f64(), Rat::parse(x)?.to_f64());
            let w = achieve::build_reduction_set(&series(s)?, eps, x, *start, *budget)?;
            let summary = format!(
                "{} terms, x error {}, max |x prefix| {}, max |y prefix| {}; {}",
                w.selection.len(),
                w.x_error,
                w.max_abs_x_prefix,
                w.max_abs_y_prefix,
                if w.holds { "holds" } else { "FAILS" }
            );
            Ok((out(summary, to_value(&w)), w.holds))
        }
        Cmd::Oracle { s, terms, target, tol } => {
            let hits = achieve::brute_subsums(&series(s)?, *terms, &parse_target(target)?, &Rat::parse(tol)?)?;
            let lines: Vec<&str> = hits.iter().map(|h| h.pattern.as_str()).collect();
            let summary = format!("{} pattern(s)\n{}", hits.len(), lines.join("\n"));
            ok(out(summary, to_value(&hits)))
        }
        Cmd::Extreme { action } => match action {
            ExtremeCmd::Build(a) => {
                let (sched, levels) = schedule(a)?;
                let s = extreme::build_extreme(&sched, levels)?;
                let summary = format!(
                    "{} block(s); boundaries {:?}",
                    s.blocks.len(),
                    s.boundaries().iter().map(|b| b.as_ref().map_or("symbolic".into(), |v| v.to_string())).collect::<Vec<_>>()
                );
                ok(out(summary, to_value(&s)))
            }
            ExtremeCmd::Verify(a) => {
                let (sched, levels) = schedule(a)?;
                let s = extreme::build_extreme(&sched, levels)?;
                let (pass, v) = extreme_verify(&s)?;
                Ok((out(format!("extreme verify: {}", if pass { "pass" } else { "FAIL" }), v), pass))
            }
        },
        Cmd::Raster { s, terms, samples, region, resolution, seed } => {
            let (w, h) = resolution
                .split_once(['x', 'X'])
                .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
                .ok_or_else(|| Error::Parse(format!("resolution must be WxH, got {resolution:?}")))?;
            let p = RasterParams {
                terms: *terms,
                samples: *samples,
                region: region.parse::<Region>()?,
                width: w,
                height: h,
                seed: *seed,
            };
            let g = raster::raster(&series(s)?, &p)?;
            let summary = format!(
                "{} samples, {} outside, {}/{} cells hit",
                g.samples,
                g.outside,
                g.nonzero_cells(),
                g.width * g.height
            );
            let value = json!({
                "params": p,
                "samples": g.samples,
                "outside": g.outside,
                "nonzero_cells": g.nonzero_cells(),
                "counts_csv": g.to_csv(),
            });
            let mut o = out(summary, value);
            o.file = Some(g.to_pgm());
            if let Some(path) = &cli.out {
                std::fs::write(path.with_extension("csv"), g.to_csv())?;
            }
            ok(o)
        }
        Cmd::Rearrange { s, target, steps } => {
            let r = achieve::steer_rearrangement(&series(s)?, parse_target(target)?.to_f64(), *steps)?;
            let summary = format!(
                "distance {} -> {} over {} steps; checkpoints {:?}",
                r.initial_distance, r.final_distance, r.steps, r.checkpoints
            );
            ok(out(summary, to_value(&r)))
        }
        Cmd::VerifyAll { only, inject_delta_fault } => {
            let r = verify::run_verify(&VerifyOptions { only: only.clone(), inject_delta_fault: *inject_delta_fault })?;
            let lines: Vec<String> = r
                .criteria
                .iter()
                .map(|c| format!("[{}] {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.module, c.title))
                .collect();
            let pass = r.pass;
            let mut o = out(lines.join("\n"), to_value(&r));
            o.file = Some(r.to_json().into_bytes());
            Ok((o, pass))
        }
    }
}

fn write_out(path: &Path, o: &Output) -> Result<()> {
    let bytes = match &o.file {
        Some(b) => b.clone(),
        None => serde_json::to_string_pretty(&o.value).expect("serializable").into_bytes(),
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

fn init_threads() {
    if let Some(n) = std::env::var("LEVYLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // a second initialisation can only fail if something already built the pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    use std::io::Write as _;
    let cli = Cli::parse();
    init_threads();
    match run(&cli) {
        Ok((o, pass)) => {
            eprintln!("{}", o.summary);
            if cli.json {
                let text = serde_json::to_string_pretty(&o.value).expect("serializable");
                // a closed pipe (e.g. `| head`) is not an error worth a panic
                if writeln!(std::io::stdout().lock(), "{text}").is_err() {
                    return ExitCode::FAILURE;
                }
            }
            if let Some(path) = &cli.out {
                if let Err(e) = write_out(path, &o) {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
