//! Command-line front end: parse curve files, inspect polytope data, run
//! the zeta pipeline, and verify against brute-force point counts.

use clap::{Parser, Subcommand};
use polyzeta::curve_file::{parse_curve, CurveFile};
use polyzeta::nondegen::validate_input;
use polyzeta::oracle;
use polyzeta::zeta::{compute_zeta, determine_precision, ZetaOptions, ZetaResult};
use serde_json::{json, Map, Number, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "polyzeta", version, about = "Zeta functions of nondegenerate curves over finite fields")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Curve file path.
    file: PathBuf,
    /// Emit machine-readable JSON.
    #[arg(long)]
    json: bool,
    /// Expert: bypass the planned working precision (results may lose
    /// their correctness guarantee).
    #[arg(long)]
    precision_override: Option<u32>,
    /// Number of point counts to report.
    #[arg(long, default_value_t = 6)]
    kmax: usize,
    /// Worker threads for parallel sections (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Seed for randomized test utilities; the pipeline itself is
    /// deterministic and ignores it.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print polytope statistics and the precision plan without running
    /// the pipeline.
    Info(CommonArgs),
    /// Compute the zeta function numerator and point counts.
    Zeta(CommonArgs),
    /// Compute the zeta function and check the counts against brute force.
    Verify(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.cmd {
        Cmd::Info(a) | Cmd::Zeta(a) | Cmd::Verify(a) => a,
    };
    match run(&cli.cmd, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: &Cmd, args: &CommonArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    configure_threads(args.threads);
    let text = std::fs::read_to_string(&args.file)?;
    let curve = parse_curve(&text)?;
    let options = ZetaOptions {
        precision_override: args.precision_override,
        kmax: args.kmax.clamp(1, 16),
    };
    if args.precision_override.is_some() {
        eprintln!("warning: precision override bypasses the planned precision; output loses its correctness guarantee");
    }
    match cmd {
        Cmd::Info(_) => info(&curve, args),
        Cmd::Zeta(_) => {
            let result = compute_zeta(&curve.field, &curve.f, &options)?;
            if args.json {
                println!("{}", serde_json::to_string_pretty(&result_json(&result))?);
            } else {
                print_result(&result);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify(_) => {
            let report = oracle::verify(&curve.field, &curve.f, args.kmax, &options)?;
            if args.json {
                let mut v = result_json(&report.result);
                let rows: Vec<Value> = report
                    .rows
                    .iter()
                    .map(|r| {
                        json!({
                            "k": r.k,
                            "oracle": r.oracle,
                            "from_zeta": big_num(&r.from_zeta.to_string()),
                            "match": r.matches,
                        })
                    })
                    .collect();
                v.as_object_mut()
                    .unwrap()
                    .insert("verification".into(), Value::Array(rows));
                v.as_object_mut()
                    .unwrap()
                    .insert("all_match".into(), Value::Bool(report.all_match));
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                print_result(&report.result);
                println!();
                for r in &report.rows {
                    println!(
                        "k = {}: brute force {} vs zeta {}  [{}]",
                        r.k,
                        r.oracle,
                        r.from_zeta,
                        if r.matches { "ok" } else { "MISMATCH" }
                    );
                }
            }
            if report.all_match {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: point counts disagree with brute force");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn configure_threads(threads: usize) {
    // Parallel sections size their worker pool from this variable.
    if threads > 0 {
        std::env::set_var("RAYON_NUM_THREADS", threads.to_string());
    }
}

fn info(curve: &CurveFile, args: &CommonArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let v = validate_input(&curve.field, &curve.f)?;
    let poly = &v.polytope;
    let cons = v.constants;
    let plan = determine_precision(poly, &cons, curve.field.p, curve.field.n)?;
    if args.json {
        let out = json!({
            "p": curve.field.p,
            "n": curve.field.n,
            "vertices": poly.vertices.iter().map(|q| vec![q.x, q.y]).collect::<Vec<_>>(),
            "genus": poly.genus(),
            "boundary_points": poly.boundary_count(),
            "volume_x2": poly.vol2,
            "chi": [cons.chi1, cons.chi2],
            "kappa": [cons.kappa1, cons.kappa2],
            "m_ord": cons.m_ord,
            "delta": cons.delta,
            "precision_N": plan.n_prec,
            "normalizing_map": {
                "linear": v.map.linear,
                "shift": [v.map.shift.x, v.map.shift.y],
            },
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("field:            F_{}^{}", curve.field.p, curve.field.n);
        println!("normalized vertices: {:?}", poly.vertices.iter().map(|q| (q.x, q.y)).collect::<Vec<_>>());
        println!("genus g:          {}", poly.genus());
        println!("boundary points R: {}", poly.boundary_count());
        println!("volume:           {}/2", poly.vol2);
        println!("strip growth chi: [{}, {}]", cons.chi1, cons.chi2);
        println!("solver window kappa: [{}, {}]", cons.kappa1, cons.kappa2);
        println!("M = {}, Delta = {}", cons.m_ord, cons.delta);
        println!("planned precision N = {}", plan.n_prec);
    }
    Ok(ExitCode::SUCCESS)
}

fn big_num(s: &str) -> Value {
    Value::Number(Number::from_string_unchecked(s.to_string()))
}

fn result_json(z: &ZetaResult) -> Value {
    let mut timings = Map::new();
    for (stage, ms) in &z.timings_ms {
        timings.insert(stage.to_string(), json!(ms));
    }
    json!({
        "p": z.p,
        "n": z.n,
        "chi": z.chi.iter().map(|c| big_num(&c.to_string())).collect::<Vec<_>>(),
        "P": z.p_num.iter().map(|c| big_num(&c.to_string())).collect::<Vec<_>>(),
        "genus": z.genus,
        "boundary_points": z.boundary_points,
        "volume_x2": z.vol2,
        "precision_N": z.precision,
        "point_counts": z.point_counts.iter()
            .map(|(k, nk)| json!([k, big_num(&nk.to_string())]))
            .collect::<Vec<_>>(),
        "timings_ms": Value::Object(timings),
    })
}

fn print_result(z: &ZetaResult) {
    println!("field:      F_{}^{}", z.p, z.n);
    println!("genus:      {}", z.genus);
    println!("boundary:   {}", z.boundary_points);
    println!("precision:  N = {} (eps = {})", z.precision, z.epsilon_used);
    let poly_str = |coeffs: &[num_bigint::BigInt]| -> String {
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !num_traits::Zero::is_zero(*c))
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c} t"),
                _ => format!("{c} t^{i}"),
            })
            .collect::<Vec<_>>()
            .join(" + ")
    };
    println!("chi(t) =    {}", poly_str(&z.chi));
    println!("P(t)   =    {}", poly_str(&z.p_num));
    println!("zeta(t) = P(t) / (1 - {} t)", num_bigint::BigUint::from(z.p).pow(z.n as u32));
    for (k, nk) in &z.point_counts {
        println!("N_{k} = {nk}");
    }
    let total: u128 = z.timings_ms.iter().map(|(_, ms)| ms).sum();
    println!("time: {total} ms total");
}
