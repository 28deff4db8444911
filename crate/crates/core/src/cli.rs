//! The `ubw1` command line.

use crate::dirac::{phase_diagram, solve_dirac, DiracInstance};
use crate::discrepancy::LocalDiscrepancy;
use crate::dynamic::{assemble_dynamic, semicoupling_cost};
use crate::error::{Error, Result};
use crate::flow::DynamicPenalty;
use crate::measure::load_measure_pair;
use crate::reconstruct::{
    decide_dynamic, default_grid, emit_profile, reconstruct, witness_for, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::selftest;
use crate::table::{Cell, Table};
use crate::transport::{canonicalize, max_transport_distances, solve_static, SolutionFile};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "ubw1", version, about = "Unbalanced Wasserstein-1 transport: static and dynamic models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate local discrepancies.
    Disc {
        #[command(subcommand)]
        action: DiscAction,
    },
    /// Flow maps of a dynamic model.
    #[command(args_conflicts_with_subcommands = true)]
    Flow {
        #[command(subcommand)]
        action: Option<FlowAction>,
        #[command(flatten)]
        point: FlowPoint,
    },
    /// Reconstruct h_D from h_S on a grid and write (z, q, cd).
    Reconstruct {
        #[command(flatten)]
        model: ModelArgs,
        /// Grid `a:b:n`; defaults to the model's domain.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide whether a static model has a dynamic counterpart.
    Decide {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Points of the midpoint-concavity mesh.
        #[arg(long, default_value_t = 33)]
        mesh: usize,
    },
    /// Solve the static problem between two measures.
    Solve {
        #[arg(long)]
        rho0: PathBuf,
        #[arg(long)]
        rho1: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 65)]
        cuts: usize,
        /// Reroute the optimal couplings into the canonical support pattern.
        #[arg(long)]
        canonical: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-Dirac problems.
    #[command(args_conflicts_with_subcommands = true)]
    Dirac {
        #[command(subcommand)]
        action: Option<DiracAction>,
        #[command(flatten)]
        inst: DiracArgs,
    },
    /// Dynamic optimizer of a stored static solution.
    Dynamic {
        #[arg(long)]
        from_solution: PathBuf,
        /// Dynamic model, or `auto` to use the model's own or a reconstructed one.
        #[arg(long, default_value = "auto")]
        hd: String,
        /// Static model file, for solutions of custom models.
        #[arg(long)]
        model_file: Option<PathBuf>,
        #[arg(long, default_value_t = 128)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Semi-coupling cost between two Diracs.
    Sc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        dx: f64,
        #[arg(long, allow_hyphen_values = true)]
        m0: f64,
        #[arg(long, allow_hyphen_values = true)]
        m1: f64,
    },
    /// Run the acceptance checks.
    Selftest {
        /// Run only this criterion.
        #[arg(long)]
        only: Option<u32>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Catalog name, e.g. `hellinger`, `tv`, `power(2)`, `pwl(-2,-1,2,1,2,0.5)`.
    #[arg(long)]
    pub model: Option<String>,
    /// JSON file `{"h_s": {"breakpoints": [...], "values": [...]}}`.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

impl ModelArgs {
    fn load(&self) -> Result<LocalDiscrepancy> {
        match (&self.model, &self.model_file) {
            (Some(_), Some(_)) => Err(Error::Validation("give either --model or --model-file, not both".into())),
            (Some(name), None) => LocalDiscrepancy::catalog(name),
            (None, Some(path)) => LocalDiscrepancy::from_json_file(path),
            (None, None) => Err(Error::Validation("a model is required (--model or --model-file)".into())),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum DiscAction {
    /// Print c_S(m0, m1).
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        m0: f64,
        #[arg(long, allow_hyphen_values = true)]
        m1: f64,
    },
    /// Print the derivative limits and maximal transport distances.
    Limits {
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Args, Debug)]
pub struct FlowPoint {
    #[arg(long)]
    hd: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum FlowAction {
    /// Write (z, F_t(z)) for each requested t.
    Table {
        #[arg(long)]
        hd: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Comma-separated times.
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        t: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct DiracArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(allow_hyphen_values = true, long = "L")]
    l: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    m00: f64,
    #[arg(allow_hyphen_values = true, long = "m0L", default_value_t = 0.0)]
    m0l: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    m10: f64,
    #[arg(allow_hyphen_values = true, long = "m1L", default_value_t = 1.0)]
    m1l: f64,
}

#[derive(Subcommand, Debug)]
pub enum DiracAction {
    /// Write the regime on an (L, ratio) grid.
    Phase {
        #[arg(long)]
        model: String,
        #[arg(allow_hyphen_values = true, long = "Lgrid")]
        lgrid: String,
        #[arg(allow_hyphen_values = true, long = "ratiogrid")]
        ratiogrid: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parse `a:b:n` into `n` equally spaced points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Validation(format!("grid '{spec}' must have the form a:b:n with a < b and n ≥ 2"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite() && a < b && n >= 2) {
        return Err(bad());
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("--{name} must be finite and nonnegative, got {v}")))
    }
}

fn required<T>(name: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| Error::Validation(format!("--{name} is required")))
}

/// Dynamic model by name: catalog entries, the dynamics of a static
/// catalog entry such as `pwl(...)`, or `auto` for `disc`.
pub fn dynamic_by_name(name: &str, disc: Option<&LocalDiscrepancy>) -> Result<DynamicPenalty> {
    if name == "auto" {
        let disc = disc.ok_or_else(|| Error::Validation("--hd auto needs a static model".into()))?;
        return witness_for(disc);
    }
    if let Ok(dp) = DynamicPenalty::catalog(name) {
        return Ok(dp);
    }
    let d = LocalDiscrepancy::catalog(name)?;
    d.dynamic().cloned().ok_or_else(|| Error::UnknownName(format!("dynamic model '{name}'")))
}

fn provenance(table: &mut Table, command: &str) {
    table.note("ubw1", env!("CARGO_PKG_VERSION")).note("command", command);
}

fn write_table(table: &Table, path: &Path) -> Result<()> {
    table.write_file(path)
}

fn run_command(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Disc { action } => match action {
            DiscAction::Eval { model, m0, m1 } => {
                nonneg("m0", m0)?;
                nonneg("m1", m1)?;
                let d = model.load()?;
                writeln!(out, "{:?}", d.cs_eval(m0, m1)?)?;
            }
            DiscAction::Limits { model } => {
                let d = model.load()?;
                let (p1, p2) = (d.partial1_limits(), d.partial2_limits());
                let (l0, l1) = max_transport_distances(&d);
                writeln!(out, "partial1 {:?} {:?}", p1.0, p1.1)?;
                writeln!(out, "partial2 {:?} {:?}", p2.0, p2.1)?;
                writeln!(out, "L0 {l0:?}")?;
                writeln!(out, "L1 {l1:?}")?;
            }
        },
        Command::Flow { action: Some(FlowAction::Table { hd, grid, t, out: path }), .. } => {
            let dp = dynamic_by_name(&hd, None)?;
            let zs = parse_grid(&grid)?;
            let times = t
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Validation(format!("--t '{t}' must be a comma-separated list of times")))?;
            for &s in &times {
                nonneg("t", s)?;
            }
            let names: Vec<String> = std::iter::once("z".to_string()).chain(times.iter().map(|s| format!("F_{s}"))).collect();
            let cols: Vec<&str> = names.iter().map(String::as_str).collect();
            let mut table = Table::new(&cols);
            provenance(&mut table, "flow table");
            table.note("hd", dp.name()).note("grid", &grid).note("quadrature_tol", 1e-10);
            for &z in &zs {
                let mut row = vec![Cell::Real(z)];
                row.extend(times.iter().map(|&s| Cell::Real(dp.flow(s, z).value)));
                table.push(row)?;
            }
            write_table(&table, &path)?;
        }
        Command::Flow { action: None, point } => {
            let dp = dynamic_by_name(&required("hd", point.hd)?, None)?;
            let t = required("t", point.t)?;
            let z = required("z", point.z)?;
            nonneg("t", t)?;
            if !z.is_finite() {
                return Err(Error::Validation(format!("--z must be finite, got {z}")));
            }
            writeln!(out, "{:?}", dp.flow(t, z).value)?;
        }
        Command::Reconstruct { model, grid, tol, max_iter, out: path } => {
            let d = model.load()?;
            let zs = match grid {
                Some(g) => parse_grid(&g)?,
                None => default_grid(&d, 257),
            };
            if !(tol > 0.0) {
                return Err(Error::Validation(format!("--tol must be positive, got {tol}")));
            }
            let report = reconstruct(&d, &zs, tol, max_iter)?;
            let witness = decide_dynamic(&report, 33).ok().and_then(|dec| dec.witness);
            let mut table = Table::new(&["z", "q", "cd"]);
            provenance(&mut table, "reconstruct");
            table
                .note("model", d.name())
                .note("grid_points", zs.len())
                .note("tol", tol)
                .note("max_iter", max_iter)
                .note("witness", witness.is_some());
            for [z, q, cd] in emit_profile(&report, witness.as_ref()) {
                table.push(vec![z.into(), q.into(), cd.into()])?;
            }
            write_table(&table, &path)?;
            let failed = report.failures().len();
            if failed > 0 {
                writeln!(out, "{failed} grid points did not converge")?;
            }
        }
        Command::Decide { model, grid, mesh } => {
            let d = model.load()?;
            let zs = match grid {
                Some(g) => parse_grid(&g)?,
                None => default_grid(&d, 129),
            };
            if mesh < 3 {
                return Err(Error::Validation(format!("--mesh must be at least 3, got {mesh}")));
            }
            let report = reconstruct(&d, &zs, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let dec = decide_dynamic(&report, mesh)?;
            let c = report.conditions();
            writeln!(out, "{} ({})", if dec.exists { "YES" } else { "NO" }, dec.reason)?;
            writeln!(out, "necessary_ok={} sufficient_ok={}", c.necessary_ok, c.sufficient_ok)?;
        }
        Command::Solve { rho0, rho1, model, cuts, canonical, out: path } => {
            if cuts < 3 {
                return Err(Error::Validation(format!("--cuts must be at least 3, got {cuts}")));
            }
            let d = model.load()?;
            let (a, b) = load_measure_pair(&rho0, &rho1)?;
            let mut sol = solve_static(&a, &b, &d, cuts)?;
            if canonical {
                sol = canonicalize(&sol, &d)?;
            }
            let json = serde_json::to_string_pretty(&SolutionFile::from_solution(&sol))?;
            match path {
                Some(p) => {
                    std::fs::write(&p, json)?;
                    writeln!(out, "W_S in [{:?}, {:?}]", sol.dual_value, sol.primal_value)?;
                }
                None => writeln!(out, "{json}")?,
            }
        }
        Command::Dirac { action: Some(DiracAction::Phase { model, lgrid, ratiogrid, out: path }), .. } => {
            let d = LocalDiscrepancy::catalog(&model)?;
            let ls = parse_grid(&lgrid)?;
            let rs = parse_grid(&ratiogrid)?;
            if ls[0] <= 0.0 || rs[0] <= 0.0 {
                return Err(Error::Validation("--Lgrid and --ratiogrid must be positive".into()));
            }
            let rows = phase_diagram(&d, &ls, &rs)?;
            let mut table = Table::new(&["L", "ratio", "regime"]);
            provenance(&mut table, "dirac phase");
            table.note("model", d.name()).note("Lgrid", &lgrid).note("ratiogrid", &ratiogrid);
            for r in rows {
                table.push(vec![r.l.into(), r.ratio.into(), r.regime.as_str().into()])?;
            }
            write_table(&table, &path)?;
        }
        Command::Dirac { action: None, inst } => {
            let d = LocalDiscrepancy::catalog(&required("model", inst.model)?)?;
            let l = required("L", inst.l)?;
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Validation(format!("--L must be positive, got {l}")));
            }
            for (n, v) in [("m00", inst.m00), ("m0L", inst.m0l), ("m10", inst.m10), ("m1L", inst.m1l)] {
                nonneg(n, v)?;
            }
            let sol = solve_dirac(&DiracInstance { l, m00: inst.m00, m0l: inst.m0l, m10: inst.m10, m1l: inst.m1l, disc: d })?;
            writeln!(out, "{}", serde_json::to_string_pretty(&sol)?)?;
        }
        Command::Dynamic { from_solution, hd, model_file, steps, out: path } => {
            if steps < 2 {
                return Err(Error::Validation(format!("--steps must be at least 2, got {steps}")));
            }
            let file = SolutionFile::load(&from_solution)?;
            let d = match model_file {
                Some(p) => LocalDiscrepancy::from_json_file(&p)?,
                None => LocalDiscrepancy::catalog(&file.model)?,
            };
            let dp = dynamic_by_name(&hd, Some(&d))?;
            let sol = file.into_solution(d)?;
            let opt = assemble_dynamic(&sol, &dp, steps)?;
            let mut table = Table::new(&["t", "point", "m", "zeta"]);
            provenance(&mut table, "dynamic");
            table
                .note("model", sol.disc.name())
                .note("hd", dp.name())
                .note("steps", steps)
                .note("total_cost", crate::table::format_real(opt.total_cost))
                .note("zeta", "rate on [t_k, t_k+1], repeated at t = 1");
            for (x, tr) in opt.trajectories.iter().enumerate() {
                for k in 0..tr.times.len() {
                    let z = tr.rates[k.min(tr.rates.len() - 1)];
                    table.push(vec![tr.times[k].into(), x.into(), tr.masses[k].into(), z.into()])?;
                }
            }
            write_table(&table, &path)?;
            writeln!(out, "total_cost {:?} (dual {:?}, primal {:?})", opt.total_cost, sol.dual_value, sol.primal_value)?;
        }
        Command::Sc { model, dx, m0, m1 } => {
            for (n, v) in [("dx", dx), ("m0", m0), ("m1", m1)] {
                nonneg(n, v)?;
            }
            let d = model.load()?;
            let c = semicoupling_cost(&d, dx, m0, m1)?;
            writeln!(out, "primal {:?}", c.primal)?;
            writeln!(out, "dual {:?}", c.dual)?;
        }
        Command::Selftest { only } => {
            let mut all = true;
            let mut ran = 0;
            for c in selftest::criteria() {
                if only.is_some_and(|o| o != c.id) {
                    continue;
                }
                ran += 1;
                let outcome = (c.check)();
                all &= outcome.pass;
                writeln!(out, "{}", selftest::format_line(&c, &outcome))?;
                out.flush()?;
            }
            if ran == 0 {
                return Err(Error::Validation(format!("no criterion with id {}", only.unwrap_or(0))));
            }
            return Ok(if all { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// Run the command line on `args`; returns the process exit code: 0 on
/// success, 2 for invalid input, 1 for numerical failures.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run_command(cli.command, &mut lock) {
        Ok(code) => code,
        Err(e) if e.is_validation() => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        for bad in ["0:1", "1:0:5", "0:1:1", "a:1:3"] {
            assert!(parse_grid(bad).is_err());
        }
    }

    #[test]
    fn arguments_parse() {
        Cli::try_parse_from(["ubw1", "disc", "eval", "--model", "hellinger", "--m0", "1", "--m1", "4"]).unwrap();
        Cli::try_parse_from(["ubw1", "dirac", "--model", "hellinger", "--L", "1.5", "--m00", "1", "--m1L", "1"]).unwrap();
        Cli::try_parse_from([
            "ubw1", "dirac", "phase", "--model", "hellinger", "--Lgrid", "0.1:5:50", "--ratiogrid", "0.05:20:80", "--out",
            "p.csv",
        ])
        .unwrap();
        Cli::try_parse_from(["ubw1", "flow", "--hd", "hellinger", "--t", "1", "--z", "2"]).unwrap();
        Cli::try_parse_from(["ubw1", "flow", "table", "--hd", "tv", "--grid", "-1:1:5", "--out", "f.csv"]).unwrap();
    }
}
