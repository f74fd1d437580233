//! Command-line front end. Every run writes its artifacts and a
//! `manifest.json` into `<out>/<command>/`.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{ArtifactWriter, RunConfig, RunManifest, DEFAULT_CONFIG};
use crate::diagnostics::{manufactured, stokes_solve, velocity_l2_error};
use crate::error::{FsiError, Result};
use crate::evolution::{fit_decay, settle, simulate_reduced};
use crate::generator::{assemble, build_ambient_field, OperatorPair};
use crate::grid::{build_grid, GeometryConfig};
use crate::linalg::{ONE, ZERO};
use crate::output::{fmt_f64, matrix_market_string};
use crate::plot::{emit_plot, PlotKind};
use crate::spectral::{least_damped, null_direction_gain, resolvent_sweep_with, AbscissaScan};
use crate::verify::{run_suite, SuiteSettings};

/// Exit status when a run completed but one of its checks failed.
pub const EXIT_CHECK_FAILED: i32 = 3;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "fsi-lab", version, about = "Flow-structure generator, resolvent sweeps and decay checks")]
pub struct Cli {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides `evolution.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sweep range (overrides `sweep.beta_max`).
    #[arg(long, global = true)]
    pub beta_max: Option<f64>,
    /// Repeat the job on K nested grids ending at the configured one, each
    /// coarser grid halving the cell counts.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub refine: u32,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble G and K and report sizes.
    Assemble {
        /// Write the reduced G and K as Matrix Market files.
        #[arg(long)]
        dump_operators: bool,
    },
    /// Null vector and its residuals.
    Nullspace,
    /// Least-damped eigenvalues on the null-vector complement.
    Spectrum,
    /// Resolvent norm along the imaginary axis.
    Sweep,
    /// Crank–Nicolson run from seeded smooth data, with decay fit.
    Simulate,
    /// Full invariant suite; nonzero exit on any failure.
    Verify {
        /// Run only these criteria (1-12).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// Manufactured-solution convergence of the static Stokes solver.
    StokesCheck,
    /// Render an energy or sweep CSV as SVG.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        kind: PlotKind,
        /// Defaults to the CSV path with an `.svg` extension.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the default configuration.
    DefaultConfig,
}

impl clap::ValueEnum for PlotKind {
    fn value_variants<'a>() -> &'a [Self] {
        &[Self::Energy, Self::Sweep]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Self::Energy => "energy",
            Self::Sweep => "sweep",
        }))
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Assemble { .. } => "assemble",
            Self::Nullspace => "nullspace",
            Self::Spectrum => "spectrum",
            Self::Sweep => "sweep",
            Self::Simulate => "simulate",
            Self::Verify { .. } => "verify",
            Self::StokesCheck => "stokes-check",
            Self::Plot { .. } => "plot",
            Self::DefaultConfig => "default-config",
        }
    }
}

/// The configuration after applying command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.evolution.seed = s;
    }
    if let Some(b) = cli.beta_max {
        cfg.sweep.beta_max = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Nested geometries for `--refine k`, coarsest first.
pub fn refinement_levels(g: &GeometryConfig, k: u32) -> Result<Vec<GeometryConfig>> {
    let levels: Vec<GeometryConfig> = (0..k)
        .rev()
        .map(|j| {
            let f = 1usize << j;
            GeometryConfig::new(g.lx, g.ly, g.nx / f, g.ny / f)
        })
        .collect();
    for (j, l) in levels.iter().enumerate() {
        let f = 1usize << (k as usize - 1 - j);
        if l.nx * f != g.nx || l.ny * f != g.ny {
            return Err(FsiError::Config(format!(
                "--refine {k}: {}x{} cells cannot be halved {} times",
                g.nx,
                g.ny,
                k - 1
            )));
        }
        l.validate()
            .map_err(|e| FsiError::Config(format!("--refine {k}: coarsest grid invalid: {e}")))?;
    }
    Ok(levels)
}

/// Result of one invocation.
pub struct RunOutcome {
    pub manifest: Option<RunManifest>,
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> Result<RunOutcome> {
    match &cli.command {
        Command::DefaultConfig => {
            print!("{DEFAULT_CONFIG}");
            return Ok(RunOutcome {
                manifest: None,
                exit_code: 0,
            });
        }
        Command::Plot { csv, kind, output } => {
            let text = std::fs::read_to_string(csv)?;
            let title = csv.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            let svg = emit_plot(&text, *kind, &title)?;
            let path = output.clone().unwrap_or_else(|| csv.with_extension("svg"));
            std::fs::write(&path, svg)?;
            println!("wrote {}", path.display());
            return Ok(RunOutcome {
                manifest: None,
                exit_code: 0,
            });
        }
        _ => {}
    }

    let cfg = resolve_config(cli)?;
    let name = cli.command.name();
    let start = Instant::now();
    let mut writer = ArtifactWriter::new(&cfg.output.dir.join(name))?;
    let mut manifest = RunManifest::new(name, &cfg);

    match &cli.command {
        Command::Verify { only } => verify(&cfg, only, &mut writer, &mut manifest)?,
        Command::StokesCheck => stokes_check(&cfg, &mut writer, &mut manifest)?,
        cmd => {
            let levels = refinement_levels(&cfg.geometry, cli.refine)?;
            let multi = levels.len() > 1;
            for geo in levels {
                let tag = format!("{}x{}", geo.nx, geo.ny);
                let mut job = Job {
                    cfg: RunConfig {
                        geometry: geo,
                        ..cfg.clone()
                    },
                    dir: if multi { format!("{tag}/") } else { String::new() },
                    suffix: if multi { format!("@{tag}") } else { String::new() },
                    writer: &mut writer,
                    manifest: &mut manifest,
                };
                eprintln!("{name}: grid {tag}");
                job.run(cmd)?;
            }
        }
    }

    manifest.seconds = start.elapsed().as_secs_f64();
    let manifest = writer.finish(manifest)?;
    let exit_code = if manifest.success { 0 } else { EXIT_CHECK_FAILED };
    Ok(RunOutcome {
        manifest: Some(manifest),
        exit_code,
    })
}

struct Job<'a> {
    cfg: RunConfig,
    dir: String,
    suffix: String,
    writer: &'a mut ArtifactWriter,
    manifest: &'a mut RunManifest,
}

impl Job<'_> {
    fn result(&mut self, key: &str, v: f64) {
        self.manifest.result(format!("{key}{}", self.suffix), v);
    }

    fn write(&mut self, file: &str, text: &str) -> Result<()> {
        self.writer.write(&format!("{}{file}", self.dir), text.as_bytes())?;
        Ok(())
    }

    fn fail(&mut self, note: String) {
        self.manifest.success = false;
        self.manifest.notes.push(format!("{}{note}", self.suffix_note()));
    }

    fn suffix_note(&self) -> String {
        if self.suffix.is_empty() {
            String::new()
        } else {
            format!("[{}] ", &self.suffix[1..])
        }
    }

    fn pair(&self) -> Result<OperatorPair> {
        let grid = build_grid(self.cfg.geometry)?;
        let field = build_ambient_field(self.cfg.ambient.amplitude, &grid)?;
        assemble(&grid, self.cfg.physics, &field)
    }

    fn run(&mut self, cmd: &Command) -> Result<()> {
        let pair = self.pair()?;
        self.result("reduced_dim", pair.dim() as f64);
        match cmd {
            Command::Assemble { dump_operators } => {
                self.result("full_dim", pair.dofs.full_dim() as f64);
                self.result("nnz_g", pair.g.nnz() as f64);
                self.result("nnz_k", pair.k.nnz() as f64);
                self.result("g_asymmetry", pair.g.asymmetry());
                if *dump_operators {
                    self.write("G.mtx", &matrix_market_string(&pair.g))?;
                    self.write("K.mtx", &matrix_market_string(&pair.k))?;
                }
            }
            Command::Nullspace => self.nullspace(&pair)?,
            Command::Spectrum => self.spectrum(&pair)?,
            Command::Sweep => self.sweep(&pair)?,
            Command::Simulate => self.simulate(&pair)?,
            _ => unreachable!("handled by run"),
        }
        Ok(())
    }

    fn nullspace(&mut self, pair: &OperatorPair) -> Result<()> {
        let r = pair.null_residual(false)?;
        let ra = pair.null_residual(true)?;
        self.result("null_residual", r);
        self.result("adjoint_null_residual", ra);
        self.result("null_energy", pair.null_energy());
        let phi0 = pair.extend(pair.null_reduced());
        let mut csv = String::from("block,index,value\n");
        for (block, vals) in [("p", &phi0.p), ("u", &phi0.u), ("w1", &phi0.w1), ("w2", &phi0.w2)] {
            for (i, v) in vals.iter().enumerate() {
                csv.push_str(&format!("{block},{i},{}\n", fmt_f64(v.re)));
            }
        }
        self.write("null_vector.csv", &csv)?;
        for (what, v) in [("null residual", r), ("adjoint null residual", ra)] {
            if v > 1e-10 {
                self.fail(format!("{what} {v:.3e} exceeds 1e-10"));
            }
        }
        Ok(())
    }

    fn spectrum(&mut self, pair: &OperatorPair) -> Result<()> {
        let s = &self.cfg.spectrum;
        let scan = AbscissaScan {
            beta_max: s.scan_beta_max,
            step: s.scan_step,
            per_shift: 8,
        };
        let eigs = least_damped(pair, s.count, scan)?;
        let mut csv = String::from("re_lambda,im_lambda\n");
        for l in &eigs {
            csv.push_str(&format!("{},{}\n", fmt_f64(l.re), fmt_f64(l.im)));
        }
        self.write("spectrum.csv", &csv)?;
        let abscissa = eigs.first().map_or(f64::NAN, |l| l.re);
        self.result("spectral_abscissa", abscissa);
        if !(abscissa < 0.0) {
            self.fail(format!("spectral abscissa {abscissa} is not negative"));
        }
        Ok(())
    }

    fn sweep(&mut self, pair: &OperatorPair) -> Result<()> {
        let c = &self.cfg;
        let sw = resolvent_sweep_with(pair, c.sweep.beta_max, c.sweep.n_samples, c.tolerances.power)?;
        let csv = sw.to_csv();
        self.write("sweep.csv", &csv)?;
        self.write("sweep.svg", &emit_plot(&csv, PlotKind::Sweep, "resolvent norm")?)?;
        self.result("sup_estimate", sw.sup_estimate);
        self.result("sup_beta", sw.sup_beta);
        self.result("samples", sw.samples.len() as f64);
        // informational: without the projection the norm grows like 1/|β|
        for beta in [1e-1, 1e-2, 1e-3] {
            self.result(&format!("unrestricted_gain_beta_{beta}"), null_direction_gain(pair, beta)?);
        }
        if sw.partial {
            let n = sw.samples.iter().filter(|s| !s.converged).count();
            self.fail(format!("{n} sweep samples did not converge"));
        }
        Ok(())
    }

    fn simulate(&mut self, pair: &OperatorPair) -> Result<()> {
        let ev = self.cfg.evolution.clone();
        let tol = self.cfg.tolerances.clone();
        let mut x = pair.random_smooth_complement(ev.seed, false);
        if ev.settle_time > 0.0 {
            x = settle(pair, &x, ev.settle_time, ev.settle_dt)?;
        }
        let rec = simulate_reduced(pair, &x, ev.t_end, ev.dt)?;
        let csv = rec.to_csv();
        self.write("energy.csv", &csv)?;
        self.write("energy.svg", &emit_plot(&csv, PlotKind::Energy, "energy")?)?;
        let monotone = rec.is_monotone(tol.monotone);
        let defect = rec.max_complement_defect();
        self.result("energy_balance_residual", rec.energy_balance_residual());
        self.result("max_complement_defect", defect);
        self.result("monotone", if monotone { 1.0 } else { 0.0 });
        match fit_decay(&rec, ev.fit_window) {
            Ok(fit) => {
                self.result("decay_delta", fit.delta);
                self.result("decay_m", fit.m);
                self.result("decay_r_squared", fit.r_squared);
            }
            Err(e) => self.fail(format!("decay fit: {e}")),
        }
        if !monotone {
            self.fail("energy increased during the run".into());
        }
        if defect > tol.complement_defect {
            self.fail(format!("complement defect {defect:.3e} exceeds {:e}", tol.complement_defect));
        }
        Ok(())
    }
}

fn verify(cfg: &RunConfig, only: &[u8], writer: &mut ArtifactWriter, manifest: &mut RunManifest) -> Result<()> {
    let settings = SuiteSettings {
        lx: cfg.geometry.lx,
        ly: cfg.geometry.ly,
        params: cfg.physics,
        amplitude: cfg.ambient.amplitude,
        seed: cfg.evolution.seed,
    };
    let reports = run_suite(&settings, only, |r| println!("{r}"));
    let mut csv = String::from("criterion,title,passed,seconds,summary\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},\"{}\"\n",
            r.id,
            r.title,
            r.passed,
            fmt_f64(r.seconds),
            r.summary.replace('"', "'")
        ));
        manifest.result(format!("c{:02}.passed", r.id), if r.passed { 1.0 } else { 0.0 });
        for (k, v) in &r.metrics {
            manifest.result(format!("c{:02}.{k}", r.id), *v);
        }
        if !r.passed {
            manifest.success = false;
            manifest.notes.push(r.to_string());
        }
    }
    writer.write("verify.csv", csv.as_bytes())?;
    Ok(())
}

fn stokes_check(cfg: &RunConfig, writer: &mut ArtifactWriter, manifest: &mut RunManifest) -> Result<()> {
    let nu = cfg.physics.nu;
    let mut csv = String::from("n,h,l2_error,order\n");
    let mut prev: Option<f64> = None;
    let mut min_order = f64::INFINITY;
    for n in [8, 16, 32, 64] {
        let grid = build_grid(GeometryConfig::new(1.0, 1.0, n, n))?;
        let sol = stokes_solve(&grid, nu, manufactured::force(nu), |_| ZERO, |_| [ZERO, ZERO])?;
        let e = velocity_l2_error(&grid, &sol.u, manufactured::velocity);
        let order = prev.map_or(f64::NAN, |p| (p / e).log2());
        if order.is_finite() {
            min_order = min_order.min(order);
        }
        csv.push_str(&format!("{n},{},{},{}\n", fmt_f64(1.0 / n as f64), fmt_f64(e), fmt_f64(order)));
        manifest.result(format!("l2_error@{n}"), e);
        prev = Some(e);
    }
    manifest.result("min_order", min_order);
    writer.write("stokes.csv", csv.as_bytes())?;
    if min_order < 1.8 {
        manifest.success = false;
        manifest.notes.push(format!("L² order {min_order:.3} below 1.8"));
    }
    let grid = build_grid(GeometryConfig::new(1.0, 1.0, 8, 8))?;
    let rejected = stokes_solve(&grid, nu, |_| [ZERO, ZERO], |_| ONE, |_| [ZERO, ZERO]).is_err();
    manifest.result("incompatible_rejected", if rejected { 1.0 } else { 0.0 });
    if !rejected {
        manifest.success = false;
        manifest.notes.push("incompatible data was accepted".into());
    }
    Ok(())
}
