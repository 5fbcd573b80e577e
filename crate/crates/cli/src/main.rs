//! Command-line front end: obstruction classes, the classification table,
//! the verification suite and structure checks.
//!
//! Exit codes: 0 when everything passes, 1 on a verification failure
//! (reports are still written), 2 on usage or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use genbundle_core::config::SuiteConfig;
use genbundle_core::frame::{
    circle_frame, klein_frame, mobius_frame, parallelizable_frame, quaternion_frame, SectionFrame,
};
use genbundle_core::manifold::Atlas;
use genbundle_core::metric::Metric;
use genbundle_core::section::Section;
use genbundle_core::verify::{
    run_suite, sample_chart, structure_check, SampleGrid, StructureCheck, SuiteRun, Tolerances,
    VerifyReport,
};
use genbundle_core::z2::{classify_table, Parallelizable, SwClassification};

mod table;

#[derive(Parser)]
#[command(
    name = "genbundle",
    version,
    about = "Triviality of generalized tangent bundles: exact mod-2 obstructions and numerical frame verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Table,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print w(T) and w(TT) for RP^n with the obstruction verdict.
    Sw {
        #[arg(value_parser = clap::value_parser!(u64).range(1..=1024))]
        n: u64,
    },
    /// Tabulate triviality facts for S^n and RP^n, n = 1..=n_max.
    Classify {
        #[arg(value_parser = clap::value_parser!(u64).range(1..=1024))]
        n_max: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite from a JSON config and write the report.
    Verify {
        /// Config path; falls back to $GENBUNDLE_CONFIG, then to the
        /// built-in default suite.
        config: Option<PathBuf>,
        /// Report file (JSON array of per-frame reports).
        #[arg(long, default_value = "genbundle-report.json")]
        out: PathBuf,
        /// `table` prints a summary; `json` echoes the report to stdout;
        /// `csv` additionally writes per-point Gram determinants next to
        /// the report.
        #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol_det: Option<f64>,
        #[arg(long)]
        tol_overlap: Option<f64>,
        #[arg(long)]
        tol_op: Option<f64>,
        /// Grid override: comma-separated per-axis resolution (a single
        /// value applies to every axis).
        #[arg(long)]
        grid: Option<String>,
    },
    /// Evaluate structure identities (metric:J, metric:F, frame:J, frame:F)
    /// on one built-in atlas.
    Structures {
        /// mobius, klein, circle, torus or sphere(3)
        atlas: String,
        /// Structure names; defaults to all four.
        names: Vec<String>,
        #[arg(long, default_value_t = 0x00C0_FFEE)]
        seed: u64,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 10)]
        random_inputs: usize,
        #[arg(long)]
        tol_op: Option<f64>,
    },
    /// Summarize a previously written JSON report.
    Report { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Sw { n } => cmd_sw(n as usize),
        Command::Classify { n_max, format, out } => cmd_classify(n_max as usize, format, out),
        Command::Verify {
            config,
            out,
            format,
            seed,
            tol_det,
            tol_overlap,
            tol_op,
            grid,
        } => cmd_verify(
            config,
            out,
            format,
            seed,
            tol_det,
            tol_overlap,
            tol_op,
            grid,
        ),
        Command::Structures {
            atlas,
            names,
            seed,
            grid,
            random_inputs,
            tol_op,
        } => cmd_structures(&atlas, names, seed, grid, random_inputs, tol_op),
        Command::Report { path } => cmd_report(&path),
    }
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn cmd_sw(n: usize) -> ExitCode {
    let row = match genbundle_core::z2::classify_rpn(n) {
        Ok(row) => row,
        Err(e) => return usage_error(e),
    };
    let verdict = if row.obstruction_trivial {
        "zero"
    } else {
        "NONZERO"
    };
    println!(
        "w(T) = {}; w(TT) = {}; obstruction: {}",
        row.tangent_sw, row.gen_sw, verdict
    );
    ExitCode::SUCCESS
}

fn emit(out: Option<&Path>, text: &str) -> ExitCode {
    match out {
        None => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Some(path) => match std::fs::write(path, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => usage_error(format!("cannot write {}: {e}", path.display())),
        },
    }
}

fn cmd_classify(n_max: usize, format: OutputFormat, out: Option<PathBuf>) -> ExitCode {
    let rows = match classify_table(n_max) {
        Ok(rows) => rows,
        Err(e) => return usage_error(e),
    };
    let text = match format {
        OutputFormat::Table => table::classification_table(&rows),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            s
        }
        OutputFormat::Csv => classification_csv(&rows),
    };
    emit(out.as_deref(), &text)
}

fn classification_csv(rows: &[SwClassification]) -> String {
    let mut out = String::from(
        "n,sphere_tangent_trivial,sphere_gen_trivial,rp_parallelizable,rp_obstruction_trivial,rp_tangent_sw,rp_gen_sw\n",
    );
    for row in rows {
        let par = match row.parallelizable_known {
            Parallelizable::Yes => "yes",
            Parallelizable::No => "no",
            Parallelizable::NotDecided => "undecided",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.n,
            row.sphere_tangent_trivial,
            row.sphere_gen_trivial,
            par,
            row.obstruction_trivial,
            row.tangent_sw,
            row.gen_sw
        ));
    }
    out
}

fn parse_grid_override(text: &str) -> Result<Vec<usize>, String> {
    let parts: Result<Vec<usize>, _> = text.split(',').map(|p| p.trim().parse()).collect();
    match parts {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("malformed --grid value `{text}`")),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    config_path: Option<PathBuf>,
    out: PathBuf,
    format: OutputFormat,
    seed: Option<u64>,
    tol_det: Option<f64>,
    tol_overlap: Option<f64>,
    tol_op: Option<f64>,
    grid: Option<String>,
) -> ExitCode {
    let config_path = config_path.or_else(|| std::env::var_os("GENBUNDLE_CONFIG").map(Into::into));
    let text = match &config_path {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => return usage_error(format!("cannot read {}: {e}", path.display())),
        },
        None => genbundle_core::config::DEFAULT_CONFIG_JSON.to_string(),
    };
    let mut config = match SuiteConfig::from_json(&text) {
        Ok(cfg) => cfg,
        Err(e) => return usage_error(e),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(v) = tol_det {
        config.tolerances.det_tol = v;
    }
    if let Some(v) = tol_overlap {
        config.tolerances.overlap_tol = v;
    }
    if let Some(v) = tol_op {
        config.tolerances.op_tol = v;
    }
    if let Some(text) = &grid {
        let resolution = match parse_grid_override(text) {
            Ok(r) => r,
            Err(e) => return usage_error(e),
        };
        for item in &mut config.items {
            let axes = item.grid.resolution.len();
            if resolution.len() == axes {
                item.grid.resolution = resolution.clone();
            } else if resolution.len() == 1 {
                item.grid.resolution = vec![resolution[0]; axes];
            } else {
                return usage_error(format!(
                    "--grid has {} axes but item `{}` has {axes}",
                    resolution.len(),
                    item.name
                ));
            }
        }
    }
    let run = match run_suite(&config) {
        Ok(run) => run,
        Err(e) => return usage_error(e),
    };
    if let Err(e) = std::fs::write(&out, run.to_json()) {
        return usage_error(format!("cannot write {}: {e}", out.display()));
    }
    match format {
        OutputFormat::Table => print!("{}", table::report_table(&run.reports)),
        OutputFormat::Json => print!("{}", run.to_json()),
        OutputFormat::Csv => {
            let csv_path = out.with_extension("csv");
            if let Err(e) = std::fs::write(&csv_path, gram_csv(&run)) {
                return usage_error(format!("cannot write {}: {e}", csv_path.display()));
            }
            print!("{}", table::report_table(&run.reports));
            eprintln!("per-point determinants: {}", csv_path.display());
        }
    }
    eprintln!("report: {}", out.display());
    if run.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn gram_csv(run: &SuiteRun) -> String {
    let width = run
        .gram_points
        .iter()
        .map(|p| p.coords.len())
        .max()
        .unwrap_or(0);
    let mut out = String::from("frame,chart,index");
    for i in 0..width {
        out.push_str(&format!(",c{i}"));
    }
    out.push_str(",det,rcond\n");
    for (index, p) in run.gram_points.iter().enumerate() {
        out.push_str(&format!("{},{},{index}", p.frame, p.chart));
        for i in 0..width {
            match p.coords.get(i) {
                Some(c) => out.push_str(&format!(",{c}")),
                None => out.push(','),
            }
        }
        out.push_str(&format!(",{},{}\n", p.det, p.rcond));
    }
    out
}

/// The canonical frame of a built-in atlas: the explicit constructions for
/// the Möbius strip, Klein bottle, circle and three-sphere, and the
/// coordinate-field frame for the (parallelizable) flat torus.
fn builtin_frame(
    atlas: &Arc<Atlas>,
    metric: &Metric,
) -> Result<SectionFrame, genbundle_core::Error> {
    match atlas.name() {
        "mobius" => mobius_frame(atlas.clone(), metric),
        "klein" => klein_frame(atlas.clone(), metric),
        "circle" => circle_frame(atlas.clone(), metric),
        "sphere(3)" => quaternion_frame(atlas.clone(), metric),
        "torus" => {
            let du = Section::tangent_from_exprs(
                "du",
                atlas,
                atlas
                    .charts()
                    .iter()
                    .map(|c| {
                        (
                            c.name.clone(),
                            vec![
                                genbundle_core::expr::Expr::Num(1.0),
                                genbundle_core::expr::Expr::Num(0.0),
                            ],
                        )
                    })
                    .collect(),
            )?;
            let dtheta = Section::tangent_from_exprs(
                "dtheta",
                atlas,
                atlas
                    .charts()
                    .iter()
                    .map(|c| {
                        (
                            c.name.clone(),
                            vec![
                                genbundle_core::expr::Expr::Num(0.0),
                                genbundle_core::expr::Expr::Num(1.0),
                            ],
                        )
                    })
                    .collect(),
            )?;
            parallelizable_frame(atlas.clone(), vec![du, dtheta], metric)
        }
        other => Err(genbundle_core::Error::BadConfig(format!(
            "no built-in frame for atlas `{other}`"
        ))),
    }
}

fn structure_points(
    atlas: &Arc<Atlas>,
    grid_override: Option<&str>,
    seed: u64,
) -> Result<Vec<genbundle_core::manifold::ManifoldPoint>, ExitCode> {
    let resolution: Vec<usize> = match grid_override {
        Some(text) => match parse_grid_override(text) {
            // A single value fans out across the chart axes; the embedded
            // backend reads the product as the sample count, so one entry
            // stays one entry.
            Ok(r) if r.len() == 1 && !atlas.is_embedded() => vec![r[0]; atlas.dim()],
            Ok(r) => r,
            Err(e) => return Err(usage_error(e)),
        },
        None => {
            if atlas.is_embedded() {
                vec![500]
            } else if atlas.dim() == 1 {
                vec![256]
            } else {
                vec![24; atlas.dim()]
            }
        }
    };
    let mut points = Vec::new();
    for chart in atlas.charts() {
        let grid = SampleGrid {
            chart: chart.name.clone(),
            resolution: resolution.clone(),
            margin: 1e-3,
        };
        match sample_chart(atlas, &grid, seed) {
            Ok(mut pts) => points.append(&mut pts),
            Err(e) => return Err(usage_error(e)),
        }
    }
    Ok(points)
}

fn cmd_structures(
    atlas_name: &str,
    names: Vec<String>,
    seed: u64,
    grid: Option<String>,
    random_inputs: usize,
    tol_op: Option<f64>,
) -> ExitCode {
    let atlas = match Atlas::from_name(atlas_name) {
        Ok(a) => Arc::new(a),
        Err(e) => return usage_error(e),
    };
    let metric = if atlas.is_embedded() {
        Metric::round()
    } else {
        Metric::euclidean()
    };
    let frame = match builtin_frame(&atlas, &metric) {
        Ok(f) => f,
        Err(e) => return usage_error(e),
    };
    let names = if names.is_empty() {
        vec![
            "metric:J".to_string(),
            "metric:F".to_string(),
            "frame:J".to_string(),
            "frame:F".to_string(),
        ]
    } else {
        names
    };
    let points = match structure_points(&atlas, grid.as_deref(), seed) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let mut tolerances = Tolerances::default();
    if let Some(v) = tol_op {
        tolerances.op_tol = v;
    }
    let mut all_pass = true;
    println!(
        "atlas {} ({} sample points, {} random inputs each, seed {seed})",
        atlas.name(),
        points.len(),
        random_inputs
    );
    for name in &names {
        let check = match structure_check(name, &frame, &metric, &points, random_inputs, seed) {
            Ok(c) => c,
            Err(e) => return usage_error(e),
        };
        let pass = structure_pass(&check, &tolerances);
        all_pass &= pass;
        print!("{}", table::structure_block(&check, &tolerances, pass));
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn structure_pass(check: &StructureCheck, tolerances: &Tolerances) -> bool {
    check.identity_residual < tolerances.op_tol
        && (!check.symmetry_gated || check.symmetry_residual < tolerances.op_tol)
        && (!check.agreement_gated
            || check
                .agreement_residual
                .is_some_and(|r| r < tolerances.agreement_tol))
        && check.eigen_rank_ok.unwrap_or(true)
}

fn cmd_report(path: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return usage_error(format!("cannot read {}: {e}", path.display())),
    };
    let reports: Vec<VerifyReport> = match serde_json::from_str(&text) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    print!("{}", table::report_table(&reports));
    if reports.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
