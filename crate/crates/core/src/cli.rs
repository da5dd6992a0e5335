//! Run configuration, subcommand dispatch and artifact output.
//!
//! Configs are flat `key = value` text with dotted section prefixes:
//!
//! ```text
//! subcommand = solve
//! problem.n = 3
//! problem.P = 2
//! problem.k = 2
//! problem.l = 0
//! problem.p = 4
//! problem.q = 1
//! phi.kind = constant        # constant | axisym_power | file
//! phi.value = 12
//! grid.backend = axisym      # axisym | full_s2
//! grid.resolution = 33
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{
    check_phi, verify_bounds, verify_gamma_bounds, BoundCheck, BoundsReport, PhiReport,
};
use crate::error::{Error, Result};
use crate::problem::{ExponentCase, ProblemSpec};
use crate::properties::{run_suite_with, PropertyReport, DEFAULT_TRIALS};
use crate::solver::{
    continuation, homogeneous_solve, ContinuationOptions, EpsRecord, HomogeneousOptions,
    NewtonOptions, Problem,
};
use crate::sphere::{Backend, SphereGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Solve,
    Homogeneous,
    CheckPhi,
    VerifyProperties,
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subcommand::Solve => "solve",
            Subcommand::Homogeneous => "homogeneous",
            Subcommand::CheckPhi => "check-phi",
            Subcommand::VerifyProperties => "verify-properties",
        })
    }
}

impl std::str::FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Subcommand::Solve),
            "homogeneous" => Ok(Subcommand::Homogeneous),
            "check-phi" => Ok(Subcommand::CheckPhi),
            "verify-properties" => Ok(Subcommand::VerifyProperties),
            other => Err(Error::config(
                "subcommand",
                format!("unknown subcommand `{other}` (expected solve, homogeneous, check-phi or verify-properties)"),
            )),
        }
    }
}

/// How `φ` is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec {
    Constant(f64),
    /// `φ = base·(1 + delta·cos θ)^{−(k−l+p−1)}`
    AxisymPower {
        delta: f64,
        base: f64,
    },
    /// Per-node values from a CSV file with a `phi` column, or a single
    /// unnamed column.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub n: usize,
    pub big_p: usize,
    pub k: usize,
    pub l: usize,
    pub p: f64,
    pub q: f64,
    pub phi: PhiSpec,
    pub backend: Backend,
    pub resolution: Vec<usize>,
    pub tol: f64,
    /// Newton iteration cap per correction.
    pub max_steps: usize,
    /// Uniform homotopy steps before adaptive halving.
    pub homotopy_steps: usize,
    pub eps_list: Vec<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub property_dims: Vec<[usize; 4]>,
    pub property_trials: usize,
}

/// Tuples exercised by `verify-properties` unless configured otherwise.
pub const DEFAULT_PROPERTY_DIMS: [[usize; 4]; 5] = [
    [3, 2, 1, 0],
    [3, 2, 2, 1],
    [4, 2, 2, 0],
    [4, 3, 2, 1],
    [5, 2, 3, 1],
];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            subcommand: Subcommand::Solve,
            n: 3,
            big_p: 2,
            k: 2,
            l: 0,
            p: 4.0,
            q: 1.0,
            phi: PhiSpec::Constant(12.0),
            backend: Backend::Axisym,
            resolution: vec![33],
            tol: NewtonOptions::default().tol,
            max_steps: NewtonOptions::default().max_iters,
            homotopy_steps: ContinuationOptions::default().steps,
            eps_list: HomogeneousOptions::default().eps_list,
            seed: 0,
            output_dir: PathBuf::from("out"),
            property_dims: DEFAULT_PROPERTY_DIMS.to_vec(),
            property_trials: DEFAULT_TRIALS,
        }
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::config(field, format!("cannot parse `{value}`: {e}")))
}

fn parse_list<T: std::str::FromStr>(field: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(|s| parse_num(field, s.trim()))
        .collect()
}

fn parse_dims(value: &str) -> Result<Vec<[usize; 4]>> {
    const FIELD: &str = "properties.dims";
    value
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|tuple| {
            let parts: Vec<usize> = tuple
                .split(':')
                .map(|s| parse_num(FIELD, s.trim()))
                .collect::<Result<_>>()?;
            <[usize; 4]>::try_from(parts)
                .map_err(|_| Error::config(FIELD, format!("`{tuple}` is not of the form n:P:k:l")))
        })
        .collect()
}

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

impl RunConfig {
    /// Parse config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::config(key, "given more than once"));
            }
        }
        let mut cfg = RunConfig::default();
        let mut phi_kind = None;
        let mut phi_value = None;
        let mut phi_delta = None;
        let mut phi_base = None;
        let mut phi_path = None;
        let mut resolution_set = false;
        for (key, value) in &entries {
            let v = value.as_str();
            match key.as_str() {
                "subcommand" => cfg.subcommand = v.parse()?,
                "problem.n" => cfg.n = parse_num(key, v)?,
                "problem.P" => cfg.big_p = parse_num(key, v)?,
                "problem.k" => cfg.k = parse_num(key, v)?,
                "problem.l" => cfg.l = parse_num(key, v)?,
                "problem.p" => cfg.p = parse_num(key, v)?,
                "problem.q" => cfg.q = parse_num(key, v)?,
                "problem.case" => {
                    return Err(Error::config(
                        key,
                        "the exponent case is derived from p, q and l",
                    ))
                }
                "phi.kind" => phi_kind = Some(v.to_string()),
                "phi.value" => phi_value = Some(parse_num::<f64>(key, v)?),
                "phi.delta" => phi_delta = Some(parse_num::<f64>(key, v)?),
                "phi.base" => phi_base = Some(parse_num::<f64>(key, v)?),
                "phi.path" => phi_path = Some(PathBuf::from(v)),
                "grid.backend" => {
                    cfg.backend = v
                        .parse()
                        .map_err(|e: Error| Error::config(key, e.to_string()))?
                }
                "grid.resolution" => {
                    cfg.resolution = parse_list(key, v)?;
                    resolution_set = true;
                }
                "solver.tol" => cfg.tol = parse_num(key, v)?,
                "solver.max_steps" => cfg.max_steps = parse_num(key, v)?,
                "solver.homotopy_steps" => cfg.homotopy_steps = parse_num(key, v)?,
                "solver.eps_list" => cfg.eps_list = parse_list(key, v)?,
                "seed" => cfg.seed = parse_num(key, v)?,
                "output_dir" => cfg.output_dir = PathBuf::from(v),
                "properties.dims" => cfg.property_dims = parse_dims(v)?,
                "properties.trials" => cfg.property_trials = parse_num(key, v)?,
                _ => return Err(Error::config(key, "unknown key")),
            }
        }
        if !resolution_set && cfg.backend == Backend::FullS2 {
            cfg.resolution = vec![16];
        }
        cfg.phi = match phi_kind.as_deref().unwrap_or("constant") {
            "constant" => PhiSpec::Constant(phi_value.unwrap_or(12.0)),
            "axisym_power" => PhiSpec::AxisymPower {
                delta: phi_delta
                    .ok_or_else(|| Error::config("phi.delta", "required for axisym_power"))?,
                base: phi_base.unwrap_or(1.0),
            },
            "file" => PhiSpec::File(
                phi_path
                    .ok_or_else(|| Error::config("phi.path", "required for phi.kind = file"))?,
            ),
            other => {
                return Err(Error::config(
                    "phi.kind",
                    format!("unknown kind `{other}` (expected constant, axisym_power or file)"),
                ))
            }
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Problem data, validated with field-level messages.
    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::new(self.n, self.big_p, self.k, self.l, self.p, self.q)
            .map_err(|e| Error::config("problem", e.to_string()))
    }

    pub fn grid(&self) -> Result<SphereGrid> {
        SphereGrid::from_resolution(self.backend, self.n, &self.resolution)
            .map_err(|e| Error::config("grid", e.to_string()))
    }

    /// Sample `φ` on `grid`.
    pub fn phi_values(&self, grid: &SphereGrid, spec: &ProblemSpec) -> Result<Vec<f64>> {
        let phi = match &self.phi {
            PhiSpec::Constant(c) => vec![*c; grid.len()],
            PhiSpec::AxisymPower { delta, base } => {
                let m = spec.m();
                grid.sample(|t, _| base * (1.0 + delta * t.cos()).powf(-m))
            }
            PhiSpec::File(path) => read_phi_file(path)?,
        };
        if phi.len() != grid.len() {
            return Err(Error::config(
                "phi",
                format!("{} values for a grid with {} nodes", phi.len(), grid.len()),
            ));
        }
        if let Some(i) = phi.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config(
                "phi",
                format!("value at node {i} is not positive and finite"),
            ));
        }
        Ok(phi)
    }

    /// The configuration with every default resolved, in the input format.
    /// The derived exponent case is echoed as a comment.
    pub fn effective_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "subcommand = {}", self.subcommand);
        let _ = writeln!(s, "problem.n = {}", self.n);
        let _ = writeln!(s, "problem.P = {}", self.big_p);
        let _ = writeln!(s, "problem.k = {}", self.k);
        let _ = writeln!(s, "problem.l = {}", self.l);
        let _ = writeln!(s, "problem.p = {}", self.p);
        let _ = writeln!(s, "problem.q = {}", self.q);
        match self.problem_spec() {
            Ok(spec) => {
                let case = match spec.case() {
                    ExponentCase::Nonhomogeneous => "nonhomogeneous",
                    ExponentCase::Homogeneous => "homogeneous",
                };
                let _ = writeln!(s, "# derived: case = {case}, p - q + l = {}", spec.gap());
            }
            Err(e) => {
                let _ = writeln!(s, "# derived: invalid problem ({e})");
            }
        }
        match &self.phi {
            PhiSpec::Constant(c) => {
                let _ = writeln!(s, "phi.kind = constant\nphi.value = {c}");
            }
            PhiSpec::AxisymPower { delta, base } => {
                let _ = writeln!(
                    s,
                    "phi.kind = axisym_power\nphi.delta = {delta}\nphi.base = {base}"
                );
            }
            PhiSpec::File(p) => {
                let _ = writeln!(s, "phi.kind = file\nphi.path = {}", p.display());
            }
        }
        let _ = writeln!(s, "grid.backend = {}", self.backend);
        let _ = writeln!(s, "grid.resolution = {}", join(&self.resolution, ", "));
        let _ = writeln!(s, "solver.tol = {:e}", self.tol);
        let _ = writeln!(s, "solver.max_steps = {}", self.max_steps);
        let _ = writeln!(s, "solver.homotopy_steps = {}", self.homotopy_steps);
        let _ = writeln!(s, "solver.eps_list = {}", join(&self.eps_list, ", "));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let dims: Vec<String> = self.property_dims.iter().map(|d| join(d, ":")).collect();
        let _ = writeln!(s, "properties.dims = {}", dims.join(";"));
        let _ = writeln!(s, "properties.trials = {}", self.property_trials);
        s
    }

    fn continuation_options(&self) -> ContinuationOptions {
        ContinuationOptions {
            steps: self.homotopy_steps,
            newton: NewtonOptions {
                tol: self.tol,
                max_iters: self.max_steps,
                ..NewtonOptions::default()
            },
            ..ContinuationOptions::default()
        }
    }
}

fn read_phi_file(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let (col, header_is_data) = match headers.iter().position(|h| h.trim() == "phi") {
        Some(c) => (c, false),
        None => (0, true),
    };
    let mut values = Vec::new();
    if header_is_data {
        values.push(parse_num::<f64>(
            "phi.path",
            headers.get(0).unwrap_or("").trim(),
        )?);
    }
    for record in rdr.records() {
        let record = record?;
        let cell = record
            .get(col)
            .ok_or_else(|| Error::config("phi.path", "row without a phi value"))?;
        values.push(parse_num::<f64>("phi.path", cell.trim())?);
    }
    Ok(values)
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum Details {
    Solve {
        phi_check: PhiReport,
        bounds: BoundsReport,
        homotopy_states: usize,
    },
    Homogeneous {
        phi_check: PhiReport,
        gamma: f64,
        gamma_limit: f64,
        records: Vec<EpsRecord>,
        gamma_bounds: BoundCheck,
    },
    CheckPhi {
        phi_check: PhiReport,
    },
    Properties {
        properties: Vec<PropertyReport>,
    },
}

#[derive(Debug, Serialize)]
struct Report {
    subcommand: Subcommand,
    case: Option<ExponentCase>,
    pass: bool,
    #[serde(flatten)]
    details: Details,
}

/// What a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub pass: bool,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Execute the configured subcommand and write its artifacts into
/// `output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut artifacts = Vec::new();
    let effective = dir.join("effective_config.txt");
    write_file(&effective, &cfg.effective_text())?;
    artifacts.push(effective);
    let mut summary = Vec::new();

    let (case, pass, details) = match cfg.subcommand {
        Subcommand::VerifyProperties => {
            let reports = run_suite_with(cfg.seed, &cfg.property_dims, cfg.property_trials)
                .map_err(|e| Error::config("properties.dims", e.to_string()))?;
            let path = dir.join("properties.csv");
            write_property_table(&path, &reports)?;
            artifacts.push(path);
            for r in &reports {
                summary.push(format!(
                    "{:<4} {:<32} ({}) worst {:.3e} slack {:.0e}{}",
                    if r.pass { "ok" } else { "FAIL" },
                    r.name,
                    join(&r.tuple, ","),
                    r.worst_violation,
                    r.slack,
                    r.empirical_constant
                        .map_or(String::new(), |c| format!(" const {c:.4e}")),
                ));
            }
            let pass = reports.iter().all(|r| r.pass);
            (
                None,
                pass,
                Details::Properties {
                    properties: reports,
                },
            )
        }
        sub => {
            let spec = cfg.problem_spec()?;
            let grid = cfg.grid()?;
            let phi = cfg.phi_values(&grid, &spec)?;
            let phi_check = check_phi(&phi, &grid, &spec)?;
            summary.push(format!(
                "phi check: case {:?}, beta {}, min eig {:.6e} -> {}",
                phi_check.case_id,
                phi_check.beta,
                phi_check.min_eig,
                if phi_check.pass { "pass" } else { "fail" }
            ));
            match sub {
                Subcommand::CheckPhi => {
                    let pass = phi_check.pass;
                    (Some(spec.case()), pass, Details::CheckPhi { phi_check })
                }
                Subcommand::Solve => {
                    let problem = Problem::new(spec.clone(), grid, phi.clone())?;
                    let states = continuation(&problem, &cfg.continuation_options())?;
                    let trace = dir.join("trace.csv");
                    write_trace(&trace, &states)?;
                    artifacts.push(trace);
                    let last = states
                        .last()
                        .ok_or_else(|| Error::Precondition("empty homotopy path".into()))?;
                    let solution = dir.join("solution.csv");
                    last.field.save_csv(&solution)?;
                    artifacts.push(solution);
                    let bounds = verify_bounds(&last.field, &phi, &spec)?;
                    let u = last.field.u();
                    summary.push(format!(
                        "solve: {} homotopy states, u in [{:.10}, {:.10}], residual {:.3e}",
                        states.len(),
                        u.iter().copied().fold(f64::INFINITY, f64::min),
                        u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        last.res_inf
                    ));
                    for c in &bounds.checks {
                        summary.push(bound_line(c));
                    }
                    (
                        Some(spec.case()),
                        bounds.pass,
                        Details::Solve {
                            phi_check,
                            bounds,
                            homotopy_states: states.len(),
                        },
                    )
                }
                Subcommand::Homogeneous => {
                    let problem = Problem::new(spec.clone(), grid.clone(), phi.clone())?;
                    let opts = HomogeneousOptions {
                        eps_list: cfg.eps_list.clone(),
                        continuation: cfg.continuation_options(),
                        ..HomogeneousOptions::default()
                    };
                    let out = homogeneous_solve(&problem, &opts)?;
                    let solution = dir.join("solution.csv");
                    out.limit_field.save_csv(&solution)?;
                    artifacts.push(solution);
                    let eps_path = dir.join("eps.csv");
                    write_eps(&eps_path, &out.records)?;
                    artifacts.push(eps_path);
                    let gamma_bounds =
                        verify_gamma_bounds(&out.records, &phi, &spec, grid.spacing())?;
                    summary.push(format!(
                        "homogeneous: gamma {:.10} (limit solve {:.10})",
                        out.gamma, out.gamma_limit
                    ));
                    summary.push(bound_line(&gamma_bounds));
                    (
                        Some(spec.case()),
                        gamma_bounds.pass,
                        Details::Homogeneous {
                            phi_check,
                            gamma: out.gamma,
                            gamma_limit: out.gamma_limit,
                            records: out.records,
                            gamma_bounds,
                        },
                    )
                }
                Subcommand::VerifyProperties => unreachable!(),
            }
        }
    };
    let report = Report {
        subcommand: cfg.subcommand,
        case,
        pass,
        details,
    };
    let path = dir.join("report.json");
    write_file(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    artifacts.push(path);
    summary.push(format!(
        "{}: {}",
        cfg.subcommand,
        if pass { "PASS" } else { "FAIL" }
    ));
    Ok(RunOutcome {
        pass,
        summary,
        artifacts,
    })
}

fn bound_line(c: &BoundCheck) -> String {
    format!(
        "bound {}: [{:.6e}, {:.6e}] within [{}, {}] +- {:.1e} -> {}",
        c.name,
        c.attained_min,
        c.attained_max,
        c.lower.map_or("-inf".into(), |v| format!("{v:.6e}")),
        c.upper.map_or("inf".into(), |v| format!("{v:.6e}")),
        c.slack,
        if c.pass { "pass" } else { "fail" }
    )
}

fn write_trace(path: &Path, states: &[crate::solver::HomotopyState]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "iters", "res_inf", "min_margin", "min_eig_a"])?;
    for s in states {
        w.write_record([
            s.t.to_string(),
            s.newton_iters.to_string(),
            s.res_inf.to_string(),
            s.min_margin.to_string(),
            s.min_eig_a.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_eps(path: &Path, records: &[EpsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_property_table(path: &Path, reports: &[PropertyReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "name",
        "tuple",
        "trials",
        "worst_violation",
        "slack",
        "empirical_constant",
        "acceptance_rate",
        "pass",
    ])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            join(&r.tuple, ":"),
            r.trials.to_string(),
            r.worst_violation.to_string(),
            r.slack.to_string(),
            r.empirical_constant
                .map_or(String::new(), |c| c.to_string()),
            r.acceptance_rate.map_or(String::new(), |c| c.to_string()),
            r.pass.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_effective_text() {
        let cfg = RunConfig::default();
        let again = RunConfig::parse(&cfg.effective_text()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn parses_keys_and_comments() {
        let cfg = RunConfig::parse(
            "subcommand = homogeneous # trailing\n\
             problem.p = 3\nproblem.q = 3\n\
             phi.kind = axisym_power\nphi.delta = 0.1\n\
             grid.backend = full_s2\nproblem.n = 2\nproblem.P = 1\n\
             solver.eps_list = 0.1, 0.05\n\
             properties.dims = 3:2:1:0;4:2:2:1\n",
        )
        .unwrap();
        assert_eq!(cfg.subcommand, Subcommand::Homogeneous);
        assert_eq!(
            cfg.phi,
            PhiSpec::AxisymPower {
                delta: 0.1,
                base: 1.0
            }
        );
        assert_eq!(cfg.resolution, vec![16]);
        assert_eq!(cfg.eps_list, vec![0.1, 0.05]);
        assert_eq!(cfg.property_dims, vec![[3, 2, 1, 0], [4, 2, 2, 1]]);
        assert_eq!(
            cfg.problem_spec().unwrap().case(),
            ExponentCase::Homogeneous
        );
    }

    #[test]
    fn field_level_errors() {
        let field = |text: &str| match RunConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field("problem.k = two"), "problem.k");
        assert_eq!(field("nonsense = 1"), "nonsense");
        assert_eq!(field("problem.case = homogeneous"), "problem.case");
        assert_eq!(field("phi.kind = axisym_power"), "phi.delta");
        assert_eq!(field("seed = 1\nseed = 2"), "seed");
        let cfg = RunConfig::parse("problem.k = 4").unwrap();
        assert!(matches!(cfg.problem_spec(), Err(Error::Config { .. })));
    }

    #[test]
    fn phi_file_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.csv");
        let values: Vec<String> = (0..9).map(|i| format!("{}", 1.0 + i as f64)).collect();
        std::fs::write(
            &path,
            format!(
                "theta,phi\n{}",
                values
                    .iter()
                    .map(|v| format!("0,{v}\n"))
                    .collect::<String>()
            ),
        )
        .unwrap();
        let cfg = RunConfig {
            phi: PhiSpec::File(path),
            resolution: vec![9],
            ..RunConfig::default()
        };
        let spec = cfg.problem_spec().unwrap();
        let phi = cfg.phi_values(&cfg.grid().unwrap(), &spec).unwrap();
        assert_eq!(phi[8], 9.0);
    }
}
