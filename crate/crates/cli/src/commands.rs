//! One function per subcommand. Each builds its tables and metrics in memory;
//! [`run`] writes them.
//!
//! CSV columns:
//!
//! | subcommand          | file             | columns |
//! |---------------------|------------------|---------|
//! | `sg-kink`           | `profile`        | `x,u,v` |
//! | `sg-evolve`         | `trajectory`     | `t,energy,center,kink_index` |
//! |                     | `profile`        | `x,u,v` at `T` |
//! | `sg-bt`             | `profile`        | `x,u,v,u_exact,v_exact` |
//! | `sg-bt-inverse`     | `profile`        | `x,u,v` of the recovered partner |
//! | `sg-stability`      | `report`         | `t,distance,a,delta,energy,conjugation_residual` |
//! | `toda-soliton`      | `profile`        | `j,q,p,r` |
//! | `toda-evolve`       | `trajectory`     | `t,energy,momentum,pulse_center` |
//! |                     | `profile`        | `j,q,p,r` at `T` |
//! | `toda-bt`           | `profile`        | `j,q,p,q_exact,p_exact` |
//! | `toda-multisoliton` | `profile`        | `j,q,p,r` |
//! | `toda-bt-inverse`   | `profile`        | `j,q,p` of the recovered partner |
//! | `toda-stability`    | `report`         | `t,distance,kappa_1,gamma_1,...,energy,conjugation_residual` |
//! | `dichotomy-check`   | `profile`        | `x,alpha,f,u,u_exact,mu,mu_exact` |
//! | `conjugation-check` | `residual`       | `t,residual` |
//!
//! Every subcommand also writes `parameters.csv` (`name,value`) with the
//! scalar results quoted on its summary line.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use backlund_core::dichotomy::{
    adjoint_solution, solve_case1_continuous, solve_case2_continuous, Carrier, CoefficientProfile,
};
use backlund_core::grid::{Field, Grid1D, LatticeWindow};
use backlund_core::sine_gordon::{
    bt_forward, bt_residual_norm, kink_center, sg_bt_inverse, sg_distance, sg_energy,
    sg_evolve_with, sg_kink, sg_nondegeneracy, sg_zero, KinkParams, SGState,
};
use backlund_core::stability::{
    conjugation_residual_series_sg, conjugation_residual_series_toda, make_perturbation,
    run_stability_experiment, ExperimentConfig, FitOptions, PerturbationSpec, StabilityReport,
    SystemSpec,
};
use backlund_core::toda::{
    pulse_center, toda_bt_forward_at, toda_bt_inverse, toda_bt_residual_norm, toda_distance,
    toda_energy, toda_evolve_with, toda_momentum, toda_multisoliton, toda_soliton, toda_vacuum,
    SolitonParams, TodaState,
};
use backlund_core::Error;

use crate::config::{Config, Model};
use crate::output::{Cell, Metrics, RunSummary, Table};

pub const COMMANDS: [&str; 13] = [
    "sg-kink",
    "sg-evolve",
    "sg-bt",
    "sg-bt-inverse",
    "sg-stability",
    "toda-soliton",
    "toda-evolve",
    "toda-bt",
    "toda-multisoliton",
    "toda-bt-inverse",
    "toda-stability",
    "dichotomy-check",
    "conjugation-check",
];

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 1,
            RunError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e)
        } else {
            RunError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type Res<T> = std::result::Result<T, RunError>;

/// What a subcommand produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub metrics: Metrics,
    pub pass: bool,
    pub notes: Vec<(String, f64)>,
}

impl Outcome {
    fn new(tables: Vec<Table>) -> Self {
        Self {
            tables,
            metrics: Metrics::default(),
            pass: true,
            notes: Vec::new(),
        }
    }

    fn note(mut self, name: &str, value: f64) -> Self {
        self.notes.push((name.into(), value));
        self
    }
}

/// Runs `command`, writes its files into `out_dir` and returns the summary.
/// Exit code 3 is the caller's business: see [`RunSummary::pass`].
pub fn run(command: &str, cfg: &Config, out_dir: &Path) -> Res<(RunSummary, Outcome)> {
    let start = Instant::now();
    let outcome = execute(command, cfg)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    fs::create_dir_all(out_dir)?;
    for t in &outcome.tables {
        t.write(out_dir, cfg.output.format)?;
    }
    let mut params = Table::new("parameters", &["name", "value"]);
    for (name, value) in &outcome.notes {
        params.push(vec![Cell::Text(name.clone()), Cell::Num(*value)]);
    }
    params.write(out_dir, cfg.output.format)?;
    let mut config = cfg.clone();
    config.output.out_dir = out_dir.display().to_string();
    let summary = RunSummary {
        command: command.into(),
        config,
        pass: outcome.pass,
        metrics: outcome.metrics.clone(),
        runtime_seconds,
    };
    summary.write(out_dir)?;
    Ok((summary, outcome))
}

/// The one-line summary printed after a run.
pub fn summary_line(s: &RunSummary, o: &Outcome) -> String {
    let fmt = |x: Option<f64>| x.map_or("null".to_string(), |v| format!("{v:.6e}"));
    let m = &s.metrics;
    let mut line = format!(
        "{} pass={} sup_distance={} empirical_C={} energy_drift={} max_residual={}",
        s.command,
        s.pass,
        fmt(m.sup_distance),
        fmt(m.empirical_c),
        fmt(m.energy_drift),
        fmt(m.max_residual)
    );
    for (k, v) in &o.notes {
        line.push_str(&format!(" {k}={v:.6e}"));
    }
    line
}

pub fn execute(command: &str, cfg: &Config) -> Res<Outcome> {
    match command {
        "sg-kink" => sg_kink_cmd(cfg),
        "sg-evolve" => sg_evolve_cmd(cfg),
        "sg-bt" => sg_bt_cmd(cfg),
        "sg-bt-inverse" => sg_bt_inverse_cmd(cfg),
        "sg-stability" => stability_cmd(cfg, Model::Sg),
        "toda-soliton" => toda_soliton_cmd(cfg),
        "toda-evolve" => toda_evolve_cmd(cfg),
        "toda-bt" => toda_bt_cmd(cfg),
        "toda-multisoliton" => toda_multisoliton_cmd(cfg),
        "toda-bt-inverse" => toda_bt_inverse_cmd(cfg),
        "toda-stability" => stability_cmd(cfg, Model::Toda),
        "dichotomy-check" => dichotomy_cmd(cfg),
        "conjugation-check" => conjugation_cmd(cfg),
        other => Err(RunError::Config(format!("unknown subcommand `{other}`"))),
    }
}

fn grid(cfg: &Config) -> Res<Grid1D> {
    Ok(Grid1D::new(cfg.grid.x0, cfg.grid.dx, cfg.grid.n)?)
}

fn window(cfg: &Config) -> Res<LatticeWindow> {
    Ok(LatticeWindow::new(cfg.lattice.j0, cfg.lattice.n)?)
}

fn kink(cfg: &Config) -> Res<KinkParams> {
    Ok(KinkParams::new(cfg.system.a, cfg.system.delta)?)
}

fn solitons(cfg: &Config) -> Res<Vec<SolitonParams>> {
    let s = &cfg.system;
    let mut v = vec![SolitonParams::new(s.kappa, s.gamma_phase)?];
    if let Some(k2) = s.kappa2 {
        v.push(SolitonParams::new(k2, s.gamma_phase2)?);
    }
    Ok(v)
}

/// The configured solitons and the state with the top one removed.
fn toda_pair(cfg: &Config) -> Res<(Vec<SolitonParams>, TodaState, TodaState)> {
    let w = window(cfg)?;
    let sp = solitons(cfg)?;
    let x = toda_multisoliton(&sp, w)?;
    let y = if sp.len() > 1 {
        toda_multisoliton(&sp[..sp.len() - 1], w)?
    } else {
        toda_vacuum(w)
    };
    Ok((sp, x, y))
}

fn perturbation(cfg: &Config, model: Model) -> PerturbationSpec {
    let p = &cfg.perturbation;
    PerturbationSpec {
        kind: p.kind.resolve(model),
        amplitude: p.amplitude,
        width: p.width,
        center: p.center,
        seed: p.seed,
    }
}

fn sg_profile(name: &str, s: &SGState) -> Table {
    let mut t = Table::new(name, &["x", "u", "v"]);
    for (i, x) in s.grid().coordinates().enumerate() {
        t.push(vec![
            x.into(),
            s.u().samples()[i].into(),
            s.v().samples()[i].into(),
        ]);
    }
    t
}

fn toda_profile(name: &str, s: &TodaState) -> Table {
    let mut t = Table::new(name, &["j", "q", "p", "r"]);
    let r = s.stretches();
    for (i, j) in s.window().sites().enumerate() {
        t.push(vec![
            j.into(),
            s.q().values()[i].into(),
            s.p().values()[i].into(),
            r[i].into(),
        ]);
    }
    t
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn sg_kink_cmd(cfg: &Config) -> Res<Outcome> {
    let k = kink(cfg)?;
    let g = grid(cfg)?;
    let s = sg_kink(&k, &g, 0.0)?;
    let mut o = Outcome::new(vec![sg_profile("profile", &s)]);
    o.metrics.max_residual = Some(bt_residual_norm(&s, &sg_zero(g), k.a())?);
    Ok(o.note("gamma", k.gamma())
        .note("speed", k.speed())
        .note("energy", sg_energy(&s))
        .note("center", k.center(0.0)))
}

fn sg_evolve_cmd(cfg: &Config) -> Res<Outcome> {
    let k = kink(cfg)?;
    let g = grid(cfg)?;
    let e = &cfg.experiment;
    let s0 = sg_kink(&k, &g, 0.0)?;
    let e0 = sg_energy(&s0);
    let mut traj = Table::new("trajectory", &["t", "energy", "center", "kink_index"]);
    let mut drift: f64 = 0.0;
    let last = sg_evolve_with(&s0, e.t_final, e.dt, e.stride, |t, s| {
        let en = sg_energy(s);
        drift = drift.max((en - e0).abs() / e0);
        traj.push(vec![
            t.into(),
            en.into(),
            kink_center(s).into(),
            s.kink_index().into(),
        ]);
        Ok(())
    })?;
    let center_error = kink_center(&last).map_or(f64::NAN, |c| (c - k.center(e.t_final)).abs());
    let mut o = Outcome::new(vec![traj, sg_profile("profile", &last)]);
    o.metrics.energy_drift = Some(drift);
    Ok(o.note("center_error", center_error))
}

fn sg_bt_cmd(cfg: &Config) -> Res<Outcome> {
    let k = kink(cfg)?;
    let g = grid(cfg)?;
    let zero = sg_zero(g);
    let x = bt_forward(&zero, k.a(), k.delta())?;
    let exact = sg_kink(&k, &g, 0.0)?;
    let mut t = Table::new("profile", &["x", "u", "v", "u_exact", "v_exact"]);
    for (i, xc) in g.coordinates().enumerate() {
        t.push(vec![
            xc.into(),
            x.u().samples()[i].into(),
            x.v().samples()[i].into(),
            exact.u().samples()[i].into(),
            exact.v().samples()[i].into(),
        ]);
    }
    let err = sup_diff(x.u().samples(), exact.u().samples())
        .max(sup_diff(x.v().samples(), exact.v().samples()));
    let mut o = Outcome::new(vec![t]);
    o.metrics.max_residual = Some(bt_residual_norm(&x, &zero, k.a())?);
    Ok(o.note("closed_form_error", err))
}

fn sg_bt_inverse_cmd(cfg: &Config) -> Res<Outcome> {
    let k = kink(cfg)?;
    let g = grid(cfg)?;
    let base = sg_kink(&k, &g, 0.0)?;
    let eps = cfg.perturbation.amplitude;
    let x = make_perturbation(&perturbation(cfg, Model::Sg), &base)?;
    let (y, a) = sg_bt_inverse(&x, k.a())?;
    let dist = sg_distance(&y, &sg_zero(g))?;
    let a_error = (a - k.a()).abs();
    let mut o = Outcome::new(vec![sg_profile("profile", &y)]);
    o.metrics.sup_distance = Some(dist);
    o.metrics.max_residual = Some(bt_residual_norm(&x, &y, a)?);
    o.metrics.empirical_c = (eps > 0.0).then(|| dist.max(a_error) / eps);
    Ok(o.note("a_recovered", a).note("a_error", a_error))
}

fn stability_config(cfg: &Config, model: Model) -> Res<ExperimentConfig> {
    let system = match model {
        Model::Sg => {
            let k = kink(cfg)?;
            SystemSpec::Sg {
                x0: cfg.grid.x0,
                dx: cfg.grid.dx,
                n: cfg.grid.n,
                a: k.a(),
                center: k.center(0.0),
            }
        }
        Model::Toda => SystemSpec::Toda {
            j0: cfg.lattice.j0,
            sites: cfg.lattice.n,
            solitons: solitons(cfg)?
                .iter()
                .map(|s| (s.kappa(), s.center()))
                .collect(),
        },
    };
    let e = &cfg.experiment;
    Ok(ExperimentConfig {
        system,
        perturbation: perturbation(cfg, model),
        t_final: e.t_final,
        dt: e.dt,
        stride: e.stride,
        fit: FitOptions::default(),
        c_max: e.c_max,
        conjugation: true,
    })
}

pub fn report_table(r: &StabilityReport) -> Table {
    let mut cols = vec!["t".to_string(), "distance".to_string()];
    cols.extend(r.param_names.iter().cloned());
    cols.extend(["energy".to_string(), "conjugation_residual".to_string()]);
    let mut t = Table {
        name: "report".into(),
        columns: cols,
        rows: Vec::new(),
    };
    for row in &r.rows {
        let mut cells: Vec<Cell> = vec![row.t.into(), row.distance.into()];
        match &row.params {
            Some(p) => cells.extend(p.iter().map(|&v| Cell::Num(v))),
            None => cells.extend(r.param_names.iter().map(|_| Cell::Missing)),
        }
        cells.push(row.energy.into());
        cells.push(row.conjugation_residual.into());
        t.push(cells);
    }
    t
}

fn stability_cmd(cfg: &Config, model: Model) -> Res<Outcome> {
    let r = run_stability_experiment(&stability_config(cfg, model)?)?;
    let s = &r.summary;
    let mut o = Outcome::new(vec![report_table(&r)]);
    o.pass = s.pass;
    o.metrics = Metrics {
        sup_distance: Some(s.sup_distance),
        empirical_c: s.empirical_c,
        energy_drift: Some(s.energy_drift),
        max_residual: s.max_residual,
    };
    o = o.note("failed_fits", s.failed_fits as f64);
    if let Some(c) = s.kappa_change {
        o = o.note("kappa_change", c);
    }
    for (i, p) in s.phase_shifts.iter().flatten().enumerate() {
        o = o.note(&format!("phase_shift_{}", i + 1), *p);
    }
    Ok(o)
}

fn toda_soliton_cmd(cfg: &Config) -> Res<Outcome> {
    let w = window(cfg)?;
    let sp = solitons(cfg)?[0];
    let s = toda_soliton(&sp, w)?;
    let k = sp.kappa();
    let mut o = Outcome::new(vec![toda_profile("profile", &s)]);
    o.metrics.max_residual = Some(toda_bt_residual_norm(&s, &toda_vacuum(w), k)?);
    Ok(o.note("energy", toda_energy(&s))
        .note("energy_closed_form", 2.0 * (k.sinh() * k.cosh() - k))
        .note("q_drop", s.q_drop())
        .note("speed", sp.speed())
        .note("center", sp.center()))
}

fn toda_evolve_cmd(cfg: &Config) -> Res<Outcome> {
    let (sp, s0, _) = toda_pair(cfg)?;
    let e = &cfg.experiment;
    let (e0, m0) = (toda_energy(&s0), toda_momentum(&s0));
    let mut traj = Table::new("trajectory", &["t", "energy", "momentum", "pulse_center"]);
    let (mut drift, mut mdrift): (f64, f64) = (0.0, 0.0);
    let last = toda_evolve_with(&s0, e.t_final, e.dt, e.stride, |t, s| {
        let (en, m) = (toda_energy(s), toda_momentum(s));
        drift = drift.max((en - e0).abs() / e0.abs());
        mdrift = mdrift.max((m - m0).abs());
        traj.push(vec![t.into(), en.into(), m.into(), pulse_center(s).into()]);
        Ok(())
    })?;
    let mut o = Outcome::new(vec![traj, toda_profile("profile", &last)]);
    o.metrics.energy_drift = Some(drift);
    o = o.note("momentum_drift", mdrift);
    if sp.len() == 1 {
        let measured = (pulse_center(&last) - pulse_center(&s0)) / e.t_final;
        o = o
            .note("speed", measured)
            .note("speed_error", (measured / sp[0].speed() - 1.0).abs());
    }
    Ok(o)
}

fn toda_bt_cmd(cfg: &Config) -> Res<Outcome> {
    let w = window(cfg)?;
    let sp = solitons(cfg)?[0];
    let vacuum = toda_vacuum(w);
    let exact = toda_soliton(&sp, w)?;
    let anchor = (sp.center().round() as i64).clamp(w.j0(), w.last_site());
    let seed = exact.q().values()[w.index_of(anchor).expect("clamped into window")];
    let x = toda_bt_forward_at(&vacuum, sp.kappa(), anchor, seed)?;
    let mut t = Table::new("profile", &["j", "q", "p", "q_exact", "p_exact"]);
    for (i, j) in w.sites().enumerate() {
        t.push(vec![
            j.into(),
            x.q().values()[i].into(),
            x.p().values()[i].into(),
            exact.q().values()[i].into(),
            exact.p().values()[i].into(),
        ]);
    }
    let err = sup_diff(x.q().values(), exact.q().values())
        .max(sup_diff(x.p().values(), exact.p().values()));
    let mut o = Outcome::new(vec![t]);
    o.metrics.max_residual = Some(toda_bt_residual_norm(&x, &vacuum, sp.kappa())?);
    Ok(o.note("closed_form_error", err))
}

fn toda_multisoliton_cmd(cfg: &Config) -> Res<Outcome> {
    let (sp, x, y) = toda_pair(cfg)?;
    let top = sp[sp.len() - 1].kappa();
    let mut o = Outcome::new(vec![toda_profile("profile", &x)]);
    o.metrics.max_residual = Some(toda_bt_residual_norm(&x, &y, top)?);
    Ok(o.note("q_drop", x.q_drop())
        .note("energy", toda_energy(&x))
        .note("boundary_defect", x.boundary_defect()))
}

fn toda_bt_inverse_cmd(cfg: &Config) -> Res<Outcome> {
    let (sp, base, lower) = toda_pair(cfg)?;
    let top = sp[sp.len() - 1].kappa();
    let eps = cfg.perturbation.amplitude;
    let x = make_perturbation(&perturbation(cfg, Model::Toda), &base)?;
    let (y, k) = toda_bt_inverse(&x, top, 0.0)?;
    let dist = toda_distance(&y, &lower)?;
    let k_error = (k - top).abs();
    let mut t = Table::new("profile", &["j", "q", "p"]);
    for (i, j) in y.window().sites().enumerate() {
        t.push(vec![
            j.into(),
            y.q().values()[i].into(),
            y.p().values()[i].into(),
        ]);
    }
    let mut o = Outcome::new(vec![t]);
    o.metrics.sup_distance = Some(dist);
    o.metrics.max_residual = Some(toda_bt_residual_norm(&x, &y, k)?);
    o.metrics.empirical_c = (eps > 0.0).then(|| dist.max(k_error) / eps);
    Ok(o.note("kappa_recovered", k).note("kappa_error", k_error))
}

/// The closed-form cases `α = -tanh` (solution `x sech x` for `f = sech`,
/// adjoint `cosh`) and `α = tanh` (solvable only for data orthogonal to
/// `sech`), plus the nondegeneracy integral of the configured kink.
fn dichotomy_cmd(cfg: &Config) -> Res<Outcome> {
    let g = grid(cfg)?;
    let anchor = g.nearest_index(0.0);
    if g.x(anchor).abs() > 1e-9 {
        return Err(RunError::Config("the grid must contain x = 0".into()));
    }
    let sech = |x: f64| 1.0 / x.cosh();
    let minus =
        CoefficientProfile::continuous(Field::from_fn(g, |x| -x.tanh())?, 1.0, -1.0, anchor)?;
    let f = Field::from_fn(g, sech)?;
    let sol = solve_case1_continuous(&minus, &f)?;
    let Carrier::Continuous(mu) = adjoint_solution(&minus)? else {
        unreachable!("continuous profile")
    };
    let mut t = Table::new(
        "profile",
        &["x", "alpha", "f", "u", "u_exact", "mu", "mu_exact"],
    );
    let (mut u_err, mut mu_err): (f64, f64) = (0.0, 0.0);
    for (i, x) in g.coordinates().enumerate() {
        let (u, m) = (sol.u.samples()[i], mu.samples()[i]);
        u_err = u_err.max((u - x * sech(x)).abs());
        mu_err = mu_err.max((m / x.cosh() - 1.0).abs());
        t.push(vec![
            x.into(),
            minus.alpha()[i].into(),
            f.samples()[i].into(),
            u.into(),
            (x * sech(x)).into(),
            m.into(),
            x.cosh().into(),
        ]);
    }
    let plus = CoefficientProfile::continuous(Field::from_fn(g, f64::tanh)?, -1.0, 1.0, anchor)?;
    let rejected = matches!(
        solve_case2_continuous(&plus, &f),
        Err(Error::NotOrthogonal { .. })
    );
    let orth = Field::from_fn(g, |x| -sech(x) * x.tanh())?;
    let tail = solve_case2_continuous(&plus, &orth)?.tail;

    let k = kink(cfg)?;
    let nondeg = sg_nondegeneracy(&sg_kink(&k, &g, 0.0)?, &sg_zero(g), k.a())?;

    let worst = u_err.max(mu_err).max(tail);
    let mut o = Outcome::new(vec![t]);
    o.metrics.max_residual = Some(worst);
    o.pass = worst < 1e-6 && rejected && nondeg > 0.0;
    Ok(o.note("u_error", u_err)
        .note("mu_relative_error", mu_err)
        .note("case2_tail", tail)
        .note("case2_rejects_sech", if rejected { 1.0 } else { 0.0 })
        .note("nondegeneracy", nondeg)
        .note("bound_ratio", sol.bound_ratio))
}

/// Residual along the joint evolution of an exact pair: kink over zero, or
/// the configured solitons over the state without the top one. Passes when
/// every sample stays below `max(10 r₀, 5 dx²)` or `max(10 r₀, 100 dt²)`.
fn conjugation_cmd(cfg: &Config) -> Res<Outcome> {
    let e = &cfg.experiment;
    let (series, floor) = match cfg.system.model {
        Model::Sg => {
            let k = kink(cfg)?;
            let g = grid(cfg)?;
            let x = sg_kink(&k, &g, 0.0)?;
            let s =
                conjugation_residual_series_sg(&x, &sg_zero(g), k.a(), e.t_final, e.dt, e.stride)?;
            (s, 5.0 * g.dx() * g.dx())
        }
        Model::Toda => {
            let (sp, x, y) = toda_pair(cfg)?;
            let top = sp[sp.len() - 1].kappa();
            let s = conjugation_residual_series_toda(&x, &y, top, e.t_final, e.dt, e.stride)?;
            (s, 100.0 * e.dt * e.dt)
        }
    };
    let r0 = series[0].1;
    let threshold = (10.0 * r0).max(floor);
    let mut t = Table::new("residual", &["t", "residual"]);
    let mut worst: f64 = 0.0;
    for &(time, r) in &series {
        worst = worst.max(r);
        t.push(vec![time.into(), r.into()]);
    }
    let mut o = Outcome::new(vec![t]);
    o.metrics.max_residual = Some(worst);
    o.pass = worst <= threshold;
    Ok(o.note("initial_residual", r0).note("threshold", threshold))
}
