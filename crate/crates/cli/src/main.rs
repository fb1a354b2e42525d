use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liner_core::aperture::{default_kr_frequencies, fill_kr_table, KrTable};
use liner_core::config::LinerConfig;
use liner_core::duct::{dissipation_sweep, find_dissipation_extrema};
use liner_core::impedance::{resonance_frequencies, ImpedanceModel, KrProvider, POLE_GUARD_HZ};
use liner_core::output::{self, ImpedanceRow, ResonanceRow};
use liner_core::physics::{nearest_pole, EndCorrection};
use liner_core::validation::Validation;
use liner_core::LinerError;

/// Overrides the default cache directory.
const CACHE_ENV: &str = "LINER_CACHE_DIR";

#[derive(Parser, Debug)]
#[command(name = "liner", version, about = "Impedance and duct dissipation of perforated-plate resonator liners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args, Debug, Clone)]
struct Options {
    /// TOML configuration; the built-in DC006* file when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// k_R cache directory [env: LINER_CACHE_DIR; default .liner-cache].
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[arg(long, global = true)]
    fmin: Option<f64>,
    #[arg(long, global = true)]
    fmax: Option<f64>,
    #[arg(long, global = true)]
    fstep: Option<f64>,
    /// Impedance models (repeat or comma-separate).
    #[arg(long = "model", global = true, value_delimiter = ',')]
    models: Vec<ModelName>,
    /// Chamber depths [mm]; the configured depth when omitted.
    #[arg(long = "depth-mm", global = true, value_delimiter = ',')]
    depths_mm: Vec<f64>,
    /// Radial modes per duct section; the configured count when omitted.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Recompute cached conductivities.
    #[arg(long, global = true)]
    force: bool,
    /// Paper-fidelity solver settings (five truncation radii) instead of the coarse ones.
    #[arg(long, global = true)]
    full: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the effective Rayleigh conductivity table (cached).
    Kr,
    /// Normalised impedance curves per model and depth.
    Impedance,
    /// Zeros of the reactance per model and depth.
    Resonance,
    /// Dissipation of a plane wave by the lined duct segment, with extrema.
    Duct,
    /// Compare against the published reference values.
    Validate,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModelName {
    Ahm3v,
    GuessMorse,
    GuessIngard,
}

impl ModelName {
    fn label(self) -> &'static str {
        match self {
            ModelName::Ahm3v => "ahm3v",
            ModelName::GuessMorse => "guess-morse",
            ModelName::GuessIngard => "guess-ingard",
        }
    }
}

enum Failure {
    Config(String),
    Numerical(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Validation(_) => 4,
        }
    }
}

impl From<LinerError> for Failure {
    fn from(e: LinerError) -> Self {
        match e {
            LinerError::Config(_) | LinerError::InvalidParameter(_) => Failure::Config(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("I/O error: {e}"))
    }
}

/// Everything a subcommand needs, resolved from flags and configuration.
struct RunManifest {
    config: LinerConfig,
    out: PathBuf,
    cache_dir: PathBuf,
    opts: Options,
}

impl RunManifest {
    fn new(opts: Options) -> Result<Self, Failure> {
        let config = match &opts.config {
            Some(p) => LinerConfig::load(p)?,
            None => LinerConfig::dc006star(),
        };
        let cache_dir = opts
            .cache
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".liner-cache"));
        for dir in [&opts.out, &cache_dir] {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
        }
        if let Some(k) = opts.jobs {
            if k == 0 {
                return Err(Failure::Config("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| Failure::Config(e.to_string()))?;
        }
        if opts.modes == Some(0) {
            return Err(Failure::Config("--modes must be at least 1".into()));
        }
        if let Some(d) = opts.depths_mm.iter().find(|d| !(**d > 0.0)) {
            return Err(Failure::Config(format!("depth {d} mm must be positive")));
        }
        Ok(Self { config, out: opts.out.clone(), cache_dir, opts })
    }

    fn cache_file(&self) -> PathBuf {
        self.cache_dir.join(if self.opts.full { "kr_full.csv" } else { "kr_coarse.csv" })
    }

    /// Frequency grid from the flags, falling back to the given defaults.
    fn grid(&self, default_min: f64, default_max: f64, default_step: f64) -> Result<Vec<f64>, Failure> {
        let (lo, hi, step) = (
            self.opts.fmin.unwrap_or(default_min),
            self.opts.fmax.unwrap_or(default_max),
            self.opts.fstep.unwrap_or(default_step),
        );
        if !(lo > 0.0 && hi >= lo && step > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(Failure::Config(format!("invalid frequency range {lo}..{hi} step {step}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| lo + i as f64 * step).collect())
    }

    fn depths(&self) -> Vec<f64> {
        if self.opts.depths_mm.is_empty() {
            vec![self.config.geometry.depth]
        } else {
            self.opts.depths_mm.iter().map(|d| d * 1e-3).collect()
        }
    }

    fn models(&self) -> Result<Vec<ModelName>, Failure> {
        if self.opts.models.is_empty() {
            return Err(Failure::Config("no model selected; pass --model ahm3v,guess-morse,guess-ingard".into()));
        }
        let mut m: Vec<ModelName> = Vec::new();
        for &n in &self.opts.models {
            if !m.contains(&n) {
                m.push(n);
            }
        }
        Ok(m)
    }

    fn kr_table(&self) -> Result<Arc<KrTable>, Failure> {
        let path = self.cache_file();
        let table = KrTable::load(&path)?;
        if table.is_empty() {
            return Err(Failure::Numerical(format!(
                "no k_R data in {}; run `liner kr` first{}",
                path.display(),
                if self.opts.full { " with --full" } else { "" }
            )));
        }
        Ok(Arc::new(table))
    }

    /// Models in flag order crossed with depths in flag order.
    fn model_set(&self) -> Result<Vec<ImpedanceModel>, Failure> {
        let names = self.models()?;
        let table = if names.contains(&ModelName::Ahm3v) { Some(self.kr_table()?) } else { None };
        let mut out = Vec::new();
        for name in names {
            for depth in self.depths() {
                let geom = self.config.geometry.with_depth(depth)?;
                let gas = self.config.gas;
                out.push(match name {
                    ModelName::Ahm3v => {
                        ImpedanceModel::ahm3v(geom, gas, table.clone().unwrap() as Arc<dyn KrProvider>)
                    }
                    ModelName::GuessMorse => ImpedanceModel::guess(geom, gas, EndCorrection::Morse, name.label()),
                    ModelName::GuessIngard => ImpedanceModel::guess(geom, gas, self.config.ingard(), name.label()),
                });
            }
        }
        Ok(out)
    }
}

fn file_name(kind: &str, model: &ImpedanceModel) -> String {
    format!("{kind}_{}_L{}mm.csv", model.label, output::fmt_sig(model.geom.depth * 1e3))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_kr(m: &RunManifest) -> Result<(), Failure> {
    let freqs = if m.opts.fmin.is_none() && m.opts.fmax.is_none() && m.opts.fstep.is_none() {
        default_kr_frequencies()
    } else {
        m.grid(100.0, 2000.0, 100.0)?
    };
    let settings = m.config.kr_settings(m.opts.full);
    let path = m.cache_file();
    let mut table = KrTable::load(&path)?;
    let report = fill_kr_table(&mut table, &m.config.geometry, &m.config.gas, &freqs, &settings, m.opts.force);
    table.save(&path)?;
    println!(
        "{}: {} rows ({} reused, {} solved, {} failed)",
        path.display(),
        table.len(),
        report.reused,
        report.solved,
        report.failures.len()
    );
    for (f, e) in &report.failures {
        eprintln!("{f} Hz: {e}");
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("{} frequencies failed", report.failures.len())))
    }
}

fn cmd_impedance(m: &RunManifest) -> Result<(), Failure> {
    let models = m.model_set()?;
    let grid = m.grid(1.0, 2000.0, 1.0)?;
    for model in &models {
        let freqs: Vec<f64> =
            grid.iter().copied().filter(|&f| nearest_pole(&model.geom, &model.gas, f).1 > POLE_GUARD_HZ).collect();
        if let (Some(&lo), Some(&hi)) = (freqs.first(), freqs.last()) {
            model.check_coverage(lo, hi)?;
        }
        let table = model.kr_provider().is_some().then(|| m.kr_table()).transpose()?;
        let mut rows = Vec::with_capacity(freqs.len());
        for f in freqs {
            let kr_interpolated = match &table {
                Some(t) => t.lookup(f)?.interpolated,
                None => false,
            };
            rows.push(ImpedanceRow { sample: model.zeta(f)?, depth: model.geom.depth, kr_interpolated });
        }
        let path = m.out.join(file_name("impedance", model));
        output::write_impedance(create(&path)?, &rows)?;
        println!("{}: {} rows", path.display(), rows.len());
    }
    Ok(())
}

fn cmd_resonance(m: &RunManifest) -> Result<(), Failure> {
    let models = m.model_set()?;
    let grid = m.grid(1.0, 2000.0, 1.0)?;
    let (lo, hi) = (grid[0], *grid.last().unwrap());
    let mut rows = Vec::new();
    for model in &models {
        let lo = model.kr_provider().and_then(|k| k.coverage()).map_or(lo, |c| lo.max(c.0));
        for (i, f) in resonance_frequencies(model, lo, hi, 0.01)?.into_iter().enumerate() {
            println!("{} L = {} mm: {:.2} Hz", model.label, output::fmt_sig(model.geom.depth * 1e3), f);
            rows.push(ResonanceRow { model: model.label.clone(), depth: model.geom.depth, root_index: i + 1, f_hz: f });
        }
    }
    let path = m.out.join("resonances.csv");
    output::write_resonances(create(&path)?, &rows)?;
    println!("{}: {} rows", path.display(), rows.len());
    Ok(())
}

fn cmd_duct(m: &RunManifest) -> Result<(), Failure> {
    let models = m.model_set()?;
    let grid = m.grid(2.0, 2000.0, 2.0)?;
    let duct = m.opts.modes.map_or(m.config.duct, |n| m.config.duct.with_modes(n));
    let mut extrema = Vec::new();
    let mut worst = 0.0f64;
    for model in &models {
        let freqs: Vec<f64> = match model.kr_provider().and_then(|k| k.coverage()) {
            Some((lo, hi)) => grid.iter().copied().filter(|&f| f >= lo && f <= hi).collect(),
            None => grid.clone(),
        };
        let rows = dissipation_sweep(&duct, model, &freqs);
        let failed = rows.iter().filter(|r| r.result.is_err()).count();
        let path = m.out.join(file_name("dissipation", model));
        output::write_dissipation(create(&path)?, &model.label, model.geom.depth, duct.modes, &rows)?;
        println!("{}: {} rows, {} failed", path.display(), rows.len(), failed);
        worst = worst.max(failed as f64 / rows.len().max(1) as f64);
        let curve: Vec<(f64, f64)> =
            rows.iter().filter_map(|r| r.result.as_ref().ok().map(|s| (r.f_hz, s.dissipation))).collect();
        for e in find_dissipation_extrema(&curve) {
            extrema.push((model.label.clone(), model.geom.depth, e));
        }
    }
    let path = m.out.join("extrema.csv");
    output::write_extrema(create(&path)?, &extrema)?;
    println!("{}: {} rows", path.display(), extrema.len());
    if worst > 0.01 {
        return Err(Failure::Numerical(format!("{:.1}% of rows failed in at least one sweep", 100.0 * worst)));
    }
    Ok(())
}

fn cmd_validate(m: &RunManifest) -> Result<(), Failure> {
    let v = Validation::prepare(m.config.clone(), m.opts.full, Some(&m.cache_file()), m.opts.force)?;
    let checks = v.run_all();
    let mut report = String::new();
    report.push_str(&format!(
        "settings: S = {}, target_h = {} mm, wall layers {}\n",
        v.settings.s_list_label(),
        output::fmt_sig(v.settings.target_h * 1e3),
        v.settings.bl_layers
    ));
    for c in &checks {
        report.push_str(&c.line());
        report.push('\n');
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    report.push_str(&format!("{} of {} checks passed\n", checks.len() - failed, checks.len()));
    print!("{report}");
    std::fs::write(m.out.join("validation.txt"), &report)?;
    if failed > 0 {
        return Err(Failure::Validation(format!("{failed} checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = RunManifest::new(cli.opts).and_then(|m| match cli.command {
        Command::Kr => cmd_kr(&m),
        Command::Impedance => cmd_impedance(&m),
        Command::Resonance => cmd_resonance(&m),
        Command::Duct => cmd_duct(&m),
        Command::Validate => cmd_validate(&m),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Config(s) => format!("configuration error: {s}"),
                Failure::Numerical(s) => format!("numerical failure: {s}"),
                Failure::Validation(s) => format!("validation failed: {s}"),
            };
            eprintln!("liner: {msg}");
            ExitCode::from(f.code())
        }
    }
}
