//! Command-line front end: one subcommand per analysis, JSON configuration,
//! CSV/JSON emission with 17-significant-digit floats, and a run manifest.
//!
//! Exit codes: 0 success, 1 computational failure, 2 bad arguments/config.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use twpa::disorder::{ensemble_spectrum, splitting_curve, EnsembleSpec};
use twpa::error::{Result, TwpaError};
use twpa::floquet::{coupling_drive_map, local_drive_map, CouplingDriveSpec, LocalDriveSpec};
use twpa::greens::{finite_green, spectral_split, surface_green, Solver};
use twpa::model::{build_dynamical_matrix, build_pump_matrix, ModelConfig};
use twpa::observables::{
    added_noise, gain_semi_infinite, semi_infinite_noise, squeezing_trajectory, AmplifierPoint,
    GAIN_FLOOR, NOISE_CAP,
};
use twpa::spectral::{singular_values, stability_report};
use twpa::topology::{phase_diagram, SweepSpec, WINDING_SENTINEL};

#[derive(Parser)]
#[command(name = "twpa", version, about = "Topological amplification in parametric oscillator arrays")]
struct Cli {
    /// JSON model configuration (canonical working point by default).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (per-subcommand default name in the working directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format for tabular artifacts.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads (fallback: TWPA_THREADS; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Winding numbers and stability over a 2-parameter sweep.
    PhaseDiagram {
        /// Horizontal sweep, name:start:stop:count (gamma|pump|omega|delta).
        #[arg(long, default_value = "gamma:0:8:101", allow_hyphen_values = true)]
        sweep_x: String,
        /// Vertical sweep, name:start:stop:count.
        #[arg(long, default_value = "omega:-4:4:101", allow_hyphen_values = true)]
        sweep_y: String,
        /// Brillouin-zone discretization (auto-refined per point).
        #[arg(long, default_value_t = 1024)]
        nk: usize,
    },
    /// Singular spectrum of (omega - H) over a frequency grid.
    Spectrum {
        #[arg(long, default_value = "-4:4:161", allow_hyphen_values = true)]
        omega_grid: String,
    },
    /// Dynamical stability along a 1-parameter sweep.
    Stability {
        /// Sweep, name:start:stop:count (gamma|pump|omega|delta).
        #[arg(long, default_value = "gamma:0:8:81", allow_hyphen_values = true)]
        sweep: String,
    },
    /// Disorder ensemble: two smallest singular values per realization.
    Disorder {
        #[arg(long, default_value_t = 0.1)]
        strength: f64,
        #[arg(long, default_value_t = 100)]
        realizations: u32,
        #[arg(long, default_value_t = 12345)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Zero-mode splitting statistics versus disorder strength.
    Splitting {
        /// Strength grid, start:stop:count.
        #[arg(long, default_value = "0:0.5:11", allow_hyphen_values = true)]
        strengths: String,
        #[arg(long, default_value_t = 100)]
        realizations: u32,
        #[arg(long, default_value_t = 12345)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Coherent gain (and added noise) at one site over a frequency grid.
    Gain {
        #[arg(long)]
        site: usize,
        #[arg(long, default_value = "-4:4:161", allow_hyphen_values = true)]
        omega_grid: String,
        #[arg(long, value_enum, default_value_t = Mode::Finite)]
        mode: Mode,
    },
    /// Added noise quanta at one site over a frequency grid (finite system).
    Noise {
        #[arg(long)]
        site: usize,
        #[arg(long, default_value = "-4:4:161", allow_hyphen_values = true)]
        omega_grid: String,
    },
    /// Quadrature means/variances at one site and angle over a frequency grid.
    Squeezing {
        #[arg(long)]
        site: usize,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value = "-2:2:81", allow_hyphen_values = true)]
        omega_grid: String,
    },
    /// Semi-infinite coherence lengths (forward/backward zeta) versus frequency.
    Coherence {
        #[arg(long, default_value = "-4:4:161", allow_hyphen_values = true)]
        omega_grid: String,
    },
    /// Map a periodic drive onto effective model parameters (JSON fragment).
    FloquetMap {
        #[arg(long, value_enum)]
        scheme: Scheme,
        /// Bare coupling J_c (local scheme).
        #[arg(long, default_value_t = 1.0)]
        jc: f64,
        /// Drive strength eta (local scheme).
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        /// Phase gradient delta-phi (local scheme).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        dphi: f64,
        /// Tone amplitudes A0..A3 (coupling scheme).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a2: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a3: f64,
        /// Drive phase phi_d (coupling scheme).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi_d: f64,
    },
    /// Run the built-in verification suite; one pass/fail line per criterion.
    Verify,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Finite,
    Semi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Local,
    Coupling,
}

/// One typed cell of a tabular artifact.
enum Field {
    F(f64),
    I(i64),
    U(u64),
    S(String),
    B(bool),
    /// Missing value (error sentinel): empty in CSV, null in JSON.
    Null,
}

/// 17 significant digits: exact round-trip for f64.
fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::F(x) => fmt17(*x),
            Field::I(i) => i.to_string(),
            Field::U(u) => u.to_string(),
            Field::S(s) => s.clone(),
            Field::B(b) => b.to_string(),
            Field::Null => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Field::F(x) if x.is_finite() => json!(x),
            Field::F(x) => json!(fmt17(*x)),
            Field::I(i) => json!(i),
            Field::U(u) => json!(u),
            Field::S(s) => json!(s),
            Field::B(b) => json!(b),
            Field::Null => serde_json::Value::Null,
        }
    }
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Field>>,
}

fn write_table(path: &Path, format: Format, table: &Table) -> Result<()> {
    let body = match format {
        Format::Csv => {
            let mut s = table.header.join(",");
            s.push('\n');
            for row in &table.rows {
                s.push_str(&row.iter().map(Field::csv).collect::<Vec<_>>().join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, serde_json::Value> = table
                        .header
                        .iter()
                        .zip(row)
                        .map(|(k, v)| (k.to_string(), v.json()))
                        .collect();
                    serde_json::Value::Object(obj)
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows).map_err(json_err)?;
            s.push('\n');
            s
        }
    };
    std::fs::write(path, body)?;
    Ok(())
}

fn json_err(e: serde_json::Error) -> TwpaError {
    TwpaError::Config(e.to_string())
}

fn write_manifest(
    dir: &Path,
    subcommand: &str,
    config: &ModelConfig,
    args: serde_json::Value,
    output: &Path,
    n_errors: usize,
    wall_time_s: f64,
) -> Result<()> {
    let manifest = json!({
        "subcommand": subcommand,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "args": args,
        "threads": rayon::current_num_threads(),
        "output": output.to_string_lossy(),
        "n_errors": n_errors,
        "wall_time_s": wall_time_s,
    });
    let mut s = serde_json::to_string_pretty(&manifest).map_err(json_err)?;
    s.push('\n');
    std::fs::write(dir.join("manifest.json"), s)?;
    Ok(())
}

/// Uniform grid `start:stop:count`.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(TwpaError::Config(format!(
            "grid '{s}' must be start:stop:count"
        )));
    }
    let bad = |p: &str| TwpaError::Config(format!("bad number '{p}' in grid '{s}'"));
    let start: f64 = parts[0].parse().map_err(|_| bad(parts[0]))?;
    let stop: f64 = parts[1].parse().map_err(|_| bad(parts[1]))?;
    let count: usize = parts[2].parse().map_err(|_| bad(parts[2]))?;
    if count < 1 {
        return Err(TwpaError::Config("grid count must be >= 1".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

fn load_config(path: Option<&Path>) -> Result<ModelConfig> {
    let cfg: ModelConfig = match path {
        None => ModelConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(json_err)?
        }
    };
    cfg.params.validate()?;
    Ok(cfg)
}

fn exit_code(e: &TwpaError) -> i32 {
    match e {
        TwpaError::InvalidParameter(_) | TwpaError::Config(_) => 2,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    // Thread-pool size: flag > TWPA_THREADS > all cores.
    let threads = cli.threads.or_else(|| {
        std::env::var("TWPA_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = threads {
        if n == 0
            || rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .is_err()
        {
            eprintln!("error: invalid thread count");
            std::process::exit(2);
        }
    }
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let t0 = std::time::Instant::now();
    let cfg = load_config(cli.config.as_deref())?;
    let p = cfg.params;

    // verify: console-only, no artifacts
    if matches!(cli.cmd, Cmd::Verify) {
        let outcomes = twpa::checks::run_all();
        let mut all_ok = true;
        for (i, o) in outcomes.iter().enumerate() {
            let status = if o.passed { "PASS" } else { "FAIL" };
            println!("criterion {:2} [{status}] {}: {}", i + 1, o.name, o.detail);
            all_ok &= o.passed;
        }
        return Ok(if all_ok { 0 } else { 1 });
    }

    let (name, default_out, table, args, n_errors): (&str, &str, Table, serde_json::Value, usize) =
        match &cli.cmd {
            Cmd::Verify => unreachable!(),
            Cmd::PhaseDiagram {
                sweep_x,
                sweep_y,
                nk,
            } => {
                let sx = SweepSpec::parse(sweep_x)?;
                let sy = SweepSpec::parse(sweep_y)?;
                let grid = phase_diagram(&p, sx, sy, *nk)?;
                let xn = sx.param.name();
                let yn = sy.param.name();
                let rows = grid
                    .points
                    .iter()
                    .map(|pt| {
                        let winding = |w: i64| {
                            if w == WINDING_SENTINEL {
                                Field::Null
                            } else {
                                Field::I(w)
                            }
                        };
                        vec![
                            Field::S(xn.into()),
                            Field::F(pt.x),
                            Field::S(yn.into()),
                            Field::F(pt.y),
                            Field::F(pt.w1_raw),
                            winding(pt.w1),
                            winding(pt.w_plus),
                            winding(pt.w_minus),
                            Field::B(pt.stable),
                            Field::F(pt.max_im_eig),
                        ]
                    })
                    .collect();
                (
                    "phase-diagram",
                    "phase_diagram",
                    Table {
                        header: vec![
                            "x_name",
                            "x_value",
                            "y_name",
                            "y_value",
                            "w1_raw",
                            "w1",
                            "w_plus",
                            "w_minus",
                            "stable",
                            "max_im_eig",
                        ],
                        rows,
                    },
                    json!({ "sweep_x": sx, "sweep_y": sy, "nk": nk }),
                    grid.n_errors,
                )
            }
            Cmd::Spectrum { omega_grid } => {
                let omegas = parse_grid(omega_grid)?;
                let h = build_dynamical_matrix(&p, cfg.boundary, None)?;
                let mut rows = Vec::new();
                for &om in &omegas {
                    let vals = singular_values(&h, om)?;
                    for (i, &sv) in vals.iter().enumerate() {
                        rows.push(vec![Field::F(om), Field::U(i as u64), Field::F(sv)]);
                    }
                }
                (
                    "spectrum",
                    "spectrum",
                    Table {
                        header: vec!["omega", "index", "singular_value"],
                        rows,
                    },
                    json!({ "omega_grid": omega_grid }),
                    0,
                )
            }
            Cmd::Stability { sweep } => {
                let spec = SweepSpec::parse(sweep)?;
                let mut rows = Vec::new();
                for v in spec.values() {
                    let mut pv = p;
                    let mut omega = 0.0;
                    spec.param.apply(&mut pv, &mut omega, v);
                    let h = build_dynamical_matrix(&pv, cfg.boundary, None)?;
                    let rep = stability_report(&h)?;
                    rows.push(vec![
                        Field::F(v),
                        Field::F(rep.max_im_eigenvalue),
                        Field::B(rep.stable),
                    ]);
                }
                (
                    "stability",
                    "stability",
                    Table {
                        header: vec![spec.param.name(), "max_im_eig", "stable"],
                        rows,
                    },
                    json!({ "sweep": spec, "boundary": cfg.boundary }),
                    0,
                )
            }
            Cmd::Disorder {
                strength,
                realizations,
                seed,
                omega,
            } => {
                let mut spec = EnsembleSpec::new(p, *strength, *seed, *omega);
                spec.n_realizations = *realizations;
                let res = ensemble_spectrum(&spec)?;
                let rows = res
                    .records
                    .iter()
                    .map(|r| {
                        vec![
                            Field::F(*strength),
                            Field::U(r.realization as u64),
                            Field::F(r.min_sv),
                            Field::F(r.second_sv),
                        ]
                    })
                    .collect();
                (
                    "disorder",
                    "ensemble",
                    Table {
                        header: vec!["strength", "realization", "min_sv", "second_sv"],
                        rows,
                    },
                    json!({
                        "strength": strength,
                        "realizations": realizations,
                        "seed": seed,
                        "omega": omega,
                    }),
                    res.n_failed as usize,
                )
            }
            Cmd::Splitting {
                strengths,
                realizations,
                seed,
                omega,
            } => {
                let ws = parse_grid(strengths)?;
                let curve = splitting_curve(&p, *omega, &ws, *realizations, *seed)?;
                let rows = (0..curve.strengths.len())
                    .map(|i| {
                        vec![
                            Field::F(curve.strengths[i]),
                            Field::F(curve.lowest_mean[i]),
                            Field::F(curve.lowest_stderr[i]),
                            Field::F(curve.second_mean[i]),
                            Field::F(curve.second_stderr[i]),
                            Field::U(curve.n_ok[i] as u64),
                        ]
                    })
                    .collect();
                let n_err: usize = curve
                    .n_ok
                    .iter()
                    .map(|&k| (*realizations - k) as usize)
                    .sum();
                (
                    "splitting",
                    "splitting",
                    Table {
                        header: vec![
                            "strength",
                            "lowest_mean",
                            "lowest_stderr",
                            "second_mean",
                            "second_stderr",
                            "n_ok",
                        ],
                        rows,
                    },
                    json!({
                        "strengths": strengths,
                        "realizations": realizations,
                        "seed": seed,
                        "omega": omega,
                    }),
                    n_err,
                )
            }
            Cmd::Gain {
                site,
                omega_grid,
                mode,
            } => {
                let omegas = parse_grid(omega_grid)?;
                let rows = match mode {
                    Mode::Finite => amplifier_rows(&cfg, *site, &omegas)?,
                    Mode::Semi => {
                        let mut rows = Vec::new();
                        for &om in &omegas {
                            let gn = gain_semi_infinite(&p, *site, om)?;
                            let n_amp = semi_infinite_noise(&p, *site, om)?;
                            let n_add = if gn > GAIN_FLOOR {
                                n_amp / gn
                            } else {
                                f64::INFINITY
                            };
                            rows.push(amplifier_row(&AmplifierPoint {
                                site: *site,
                                omega: om,
                                gain: gn,
                                n_amp,
                                n_add,
                            }));
                        }
                        rows
                    }
                };
                (
                    "gain",
                    "amplifier",
                    Table {
                        header: AMPLIFIER_HEADER.to_vec(),
                        rows,
                    },
                    json!({
                        "site": site,
                        "omega_grid": omega_grid,
                        "mode": match mode { Mode::Finite => "finite", Mode::Semi => "semi" },
                    }),
                    0,
                )
            }
            Cmd::Noise { site, omega_grid } => {
                let omegas = parse_grid(omega_grid)?;
                let rows = amplifier_rows(&cfg, *site, &omegas)?;
                (
                    "noise",
                    "amplifier",
                    Table {
                        header: AMPLIFIER_HEADER.to_vec(),
                        rows,
                    },
                    json!({ "site": site, "omega_grid": omega_grid }),
                    0,
                )
            }
            Cmd::Squeezing {
                site,
                theta,
                omega_grid,
            } => {
                let omegas = parse_grid(omega_grid)?;
                let states = squeezing_trajectory(&p, &[*site], &omegas, *theta)?;
                let rows = states
                    .iter()
                    .map(|q| {
                        vec![
                            Field::F(q.omega),
                            Field::U(q.site as u64),
                            Field::F(q.theta),
                            Field::F(q.var_x),
                            Field::F(q.var_p),
                            Field::F(q.mean_x.re),
                            Field::F(q.mean_x.im),
                            Field::F(q.mean_p.re),
                            Field::F(q.mean_p.im),
                            Field::S(q.class().label().into()),
                        ]
                    })
                    .collect();
                (
                    "squeezing",
                    "squeezing",
                    Table {
                        header: vec![
                            "omega", "site", "theta", "var_x", "var_p", "mean_x_re", "mean_x_im",
                            "mean_p_re", "mean_p_im", "class",
                        ],
                        rows,
                    },
                    json!({ "site": site, "theta": theta, "omega_grid": omega_grid }),
                    0,
                )
            }
            Cmd::Coherence { omega_grid } => {
                let omegas = parse_grid(omega_grid)?;
                let mut rows = Vec::new();
                let mut n_err = 0usize;
                for &om in &omegas {
                    // non-convergence/degeneracy per frequency: sentinel row
                    let zetas = surface_green(&p, om, Solver::FiniteSizeLimit).and_then(|sg| {
                        let split = spectral_split(&sg.surface.dot(&sg.v_plus))?;
                        Ok((split.zetas, sg.converged))
                    });
                    match zetas {
                        Ok(((zp, zm), converged)) => rows.push(vec![
                            Field::F(om),
                            Field::F(zp.re),
                            Field::F(zp.im),
                            Field::F(zm.re),
                            Field::F(zm.im),
                            Field::B(converged),
                        ]),
                        Err(_) => {
                            n_err += 1;
                            rows.push(vec![
                                Field::F(om),
                                Field::Null,
                                Field::Null,
                                Field::Null,
                                Field::Null,
                                Field::B(false),
                            ]);
                        }
                    }
                }
                (
                    "coherence",
                    "coherence",
                    Table {
                        header: vec![
                            "omega",
                            "re_zeta_plus",
                            "im_zeta_plus",
                            "re_zeta_minus",
                            "im_zeta_minus",
                            "converged",
                        ],
                        rows,
                    },
                    json!({ "omega_grid": omega_grid }),
                    n_err,
                )
            }
            Cmd::FloquetMap {
                scheme,
                jc,
                eta,
                dphi,
                a0,
                a1,
                a2,
                a3,
                phi_d,
            } => {
                let map = match scheme {
                    Scheme::Local => local_drive_map(&LocalDriveSpec::new(*jc, *eta, *dphi))?,
                    Scheme::Coupling => coupling_drive_map(&CouplingDriveSpec {
                        a0: *a0,
                        a1: *a1,
                        a2: *a2,
                        a3: *a3,
                        phi_d: *phi_d,
                    }),
                };
                // gauge-normalize so the fragment is directly consumable
                let (hop, phi) = if map.hop < 0.0 {
                    (-map.hop, map.phi + std::f64::consts::PI)
                } else {
                    (map.hop, map.phi)
                };
                let out = cli
                    .out
                    .clone()
                    .unwrap_or_else(|| PathBuf::from("params.json"));
                let fragment = json!({ "hop": hop, "phi": phi, "g_s": map.g_s, "g_c": map.g_c });
                let mut s = serde_json::to_string_pretty(&fragment).map_err(json_err)?;
                s.push('\n');
                std::fs::write(&out, s)?;
                let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
                write_manifest(
                    &dir,
                    "floquet-map",
                    &cfg,
                    json!({
                        "scheme": match scheme { Scheme::Local => "local", Scheme::Coupling => "coupling" },
                        "jc": jc, "eta": eta, "dphi": dphi,
                        "a0": a0, "a1": a1, "a2": a2, "a3": a3, "phi_d": phi_d,
                        "raw_map": map,
                    }),
                    &out,
                    0,
                    t0.elapsed().as_secs_f64(),
                )?;
                return Ok(0);
            }
        };

    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{default_out}.{ext}")));
    write_table(&out, cli.format, &table)?;
    let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    write_manifest(
        &dir,
        name,
        &cfg,
        args,
        &out,
        n_errors,
        t0.elapsed().as_secs_f64(),
    )?;
    Ok(0)
}

const AMPLIFIER_HEADER: [&str; 6] = ["omega", "site", "gain", "n_amp", "n_add", "n_add_capped_flag"];

fn amplifier_row(pt: &AmplifierPoint) -> Vec<Field> {
    let capped = !pt.n_add.is_finite() || pt.n_add > NOISE_CAP;
    vec![
        Field::F(pt.omega),
        Field::U(pt.site as u64),
        Field::F(pt.gain),
        Field::F(pt.n_amp),
        Field::F(if capped { NOISE_CAP } else { pt.n_add }),
        Field::U(capped as u64),
    ]
}

fn amplifier_rows(cfg: &ModelConfig, site: usize, omegas: &[f64]) -> Result<Vec<Vec<Field>>> {
    if site >= cfg.params.n_sites {
        return Err(TwpaError::Config(format!(
            "site {site} out of range (n_sites = {})",
            cfg.params.n_sites
        )));
    }
    let h = build_dynamical_matrix(&cfg.params, cfg.boundary, None)?;
    let pm = build_pump_matrix(&cfg.params, cfg.boundary);
    let mut rows = Vec::with_capacity(omegas.len());
    for &om in omegas {
        let g = finite_green(&h, om).map_err(|e| {
            TwpaError::NonConvergence(format!("at omega = {om}: {e}"))
        })?;
        rows.push(amplifier_row(&added_noise(&g, &pm, &cfg.params, site, om)));
    }
    Ok(rows)
}
