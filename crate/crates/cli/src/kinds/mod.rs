//! The experiment kinds.

pub mod families;

use std::fmt::Write as _;

use ddlab_core::dde_engine::{BrownianDde, DdeField, DelayField};
use ddlab_core::ensemble_lab::{
    detect_density_period, evolve_ensemble_from, msd_curve, sample_ensemble_from, sample_velocity_histories,
    simulate_brownian, time_grid, velocity_bound, velocity_stats, velocity_std_law, Binning, Histogram,
    InitialEnsemble, InitialEnsembleSpec, Moments,
};
use ddlab_core::gaussian_analytic::{
    hayes_stable, r_slice_csv, r_t, sigma2_csv, sigma2_curve, CovKernel, GaussianState, LinearDdeParams, Stability,
    MAX_HORIZON_DELAYS,
};
use ddlab_core::kicked_dynamics::{fp_decay_check, ou_limit_suite, Observable};
use ddlab_core::map_density::{detect_asymptotic_period, MapSpec};
use ddlab_core::GridDensity;

use crate::config::{key, Default::*, KeySpec, RunConfig, Section, Ty::*};
use crate::registry::{kernels, maps, systems, Experiment, Job};
use crate::run::{Outputs, RunError};

fn positive(name: &str, x: f64) -> Result<f64, RunError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(RunError::invalid(format!("`{name}` = {x} must be positive")))
    }
}

fn at_least(name: &str, n: usize, min: usize) -> Result<usize, RunError> {
    if n >= min {
        Ok(n)
    } else {
        Err(RunError::invalid(format!("`{name}` = {n} must be at least {min}")))
    }
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------

pub struct MapIterate;

const MAP_ITERATE: &[KeySpec] = &[
    key("params", "map", Str, Value("hat")),
    key("params", "n_iter", Int, Required),
    key("params", "cells", Int, Value("4096")),
    // uniform | indicator | random
    key("params", "init", Str, Value("uniform")),
    key("params", "init_lo", Float, Value("0.0")),
    key("params", "init_hi", Float, Value("1.0")),
    // 0 keeps only the first and last densities
    key("params", "save_every", Int, Value("1")),
    key("params", "detect_period", Bool, Value("false")),
    key("params", "period_tol", Float, Value("1e-4")),
    key("params", "burn_in", Int, Value("200")),
    key("params", "max_period", Int, Value("64")),
    key("output", "dir", Str, Optional),
];

struct MapIterateJob {
    map: MapSpec,
    f0: GridDensity,
    n_iter: usize,
    save_every: usize,
    period: Option<(usize, usize, f64)>,
}

impl Experiment for MapIterate {
    fn kind(&self) -> &'static str {
        "map-iterate"
    }

    fn about(&self) -> &'static str {
        "iterate the transfer operator of an interval map on a density"
    }

    fn selector(&self) -> Option<(&'static str, &'static str)> {
        Some(("params", "map"))
    }

    fn schema(&self, member: Option<&str>) -> Result<Vec<KeySpec>, String> {
        maps().schema(MAP_ITERATE, member)
    }

    fn prepare(&self, cfg: &RunConfig) -> Result<Box<dyn Job>, RunError> {
        let p = cfg.params();
        let map = maps().build(p.str("map"), p)?;
        map.validate()?;
        let cells = at_least("cells", p.usize("cells"), 2)?;
        let f0 = match p.str("init") {
            "uniform" => GridDensity::uniform(0.0, 1.0, cells)?,
            "indicator" => GridDensity::indicator(0.0, 1.0, cells, p.f64("init_lo"), p.f64("init_hi"))?,
            "random" => GridDensity::random_positive(0.0, 1.0, cells, cfg.seed)?,
            other => {
                return Err(RunError::invalid(format!(
                    "unknown init `{other}`; expected uniform, indicator or random"
                )))
            }
        };
        let period = p
            .bool("detect_period")
            .then(|| (p.usize("burn_in"), p.usize("max_period"), p.f64("period_tol")));
        if let Some((_, _, tol)) = period {
            positive("period_tol", tol)?;
        }
        Ok(Box::new(MapIterateJob {
            map,
            f0,
            n_iter: p.usize("n_iter"),
            save_every: p.usize("save_every"),
            period,
        }))
    }
}

impl Job for MapIterateJob {
    fn run(&self, out: &mut Outputs) -> Result<(), RunError> {
        let op = self.map.evolution(self.f0.len())?;
        let uniform = GridDensity::uniform(0.0, 1.0, self.f0.len())?;
        let mut dens = String::from("iter,cell_left,cell_right,density\n");
        let mut dist = String::from("iter,l1_step,l1_uniform\n");
        let save = |k: usize, g: &GridDensity, dens: &mut String| {
            for (i, v) in g.values().iter().enumerate() {
                let (l, r) = g.cell(i);
                let _ = writeln!(dens, "{k},{},{},{}", f(l), f(r), f(*v));
            }
        };
        let mut g = self.f0.clone();
        save(0, &g, &mut dens);
        let _ = writeln!(dist, "0,,{}", f(g.l1_distance(&uniform)));
        for k in 1..=self.n_iter {
            let next = op.step(&g)?;
            let _ = writeln!(dist, "{k},{},{}", f(next.l1_distance(&g)), f(next.l1_distance(&uniform)));
            g = next;
            let keep = if self.save_every == 0 {
                k == self.n_iter
            } else {
                k % self.save_every == 0 || k == self.n_iter
            };
            if keep {
                save(k, &g, &mut dens);
            }
        }
        out.add("densities.csv", dens);
        out.add("distances.csv", dist);
        if let Some((burn_in, max_period, tol)) = self.period {
            let r = detect_asymptotic_period(&self.map, &self.f0, burn_in, max_period, tol)?;
            let period = r.period.map(|p| p.to_string()).unwrap_or_default();
            out.add(
                "period.csv",
                format!("period,burn_in,cycle_distance\n{period},{},{}\n", r.burn_in, f(r.cycle_distance)),
            );
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct DdeEnsemble;

const DDE_ENSEMBLE: &[KeySpec] = &[
    key("params", "system", Str, Value("hat")),
    key("params", "tau", Float, Value("1.0")),
    key("params", "steps_per_delay", Int, Value("128")),
    // uniform | mixture | constant
    key("ensemble", "spec", Str, Value("uniform")),
    key("ensemble", "n", Int, Required),
    key("ensemble", "lo", FloatList, Optional),
    key("ensemble", "hi", FloatList, Optional),
    key("ensemble", "counts", IntList, Optional),
    key("ensemble", "value", Float, Optional),
    key("output", "dir", Str, Optional),
    key("output", "snapshot_start", Float, Required),
    key("output", "snapshot_end", Float, Required),
    key("output", "snapshot_dt", Float, Value("0.125")),
    key("output", "bins", Int, Value("100")),
    key("output", "range_lo", Float, Optional),
    key("output", "range_hi", Float, Optional),
    key("output", "joint", Bool, Value("true")),
    key("output", "period_tol", Float, Value("0.1")),
];

/// Initial-function spec from `[ensemble]`.
pub fn ensemble_spec(e: Section<'_>) -> Result<InitialEnsembleSpec, RunError> {
    let need = |k: &str| {
        e.get(k)
            .ok_or_else(|| RunError::invalid(format!("[ensemble] spec `{}` needs `{k}`", e.str("spec"))))
    };
    let spec = match e.str("spec") {
        "uniform" => {
            need("lo")?;
            need("hi")?;
            match (e.f64s("lo"), e.f64s("hi")) {
                ([lo], [hi]) => InitialEnsembleSpec::IidUniformPath { lo: *lo, hi: *hi },
                _ => return Err(RunError::invalid("uniform spec takes a single `lo` and `hi`")),
            }
        }
        "mixture" => {
            need("lo")?;
            need("hi")?;
            need("counts")?;
            let (lo, hi, counts) = (e.f64s("lo"), e.f64s("hi"), e.usizes("counts"));
            if lo.len() != hi.len() || lo.len() != counts.len() {
                return Err(RunError::invalid("mixture `lo`, `hi` and `counts` must have equal lengths"));
            }
            InitialEnsembleSpec::Mixture(
                lo.iter()
                    .zip(hi)
                    .zip(counts)
                    .map(|((&lo, &hi), c)| (InitialEnsembleSpec::IidUniformPath { lo, hi }, c))
                    .collect(),
            )
        }
        "constant" => {
            need("value")?;
            InitialEnsembleSpec::ConstantPath(e.f64("value"))
        }
        other => {
            return Err(RunError::invalid(format!(
                "unknown ensemble spec `{other}`; expected uniform, mixture or constant"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Checks that every time is a whole number of steps `h` past 0.
fn on_grid(name: &str, times: &[f64], h: f64) -> Result<(), RunError> {
    for &t in times {
        let k = t / h;
        if (k - k.round()).abs() > 1e-6 {
            return Err(RunError::invalid(format!(
                "`{name}` time {t} is not a multiple of the step {h}"
            )));
        }
    }
    Ok(())
}

struct DdeEnsembleJob {
    field: DdeField,
    ensemble: InitialEnsemble,
    times: Vec<f64>,
    binning: Binning,
    joint: bool,
    dt: f64,
    period_tol: f64,
    seed: u64,
}

impl Experiment for DdeEnsemble {
    fn kind(&self) -> &'static str {
        "dde-ensemble"
    }

    fn about(&self) -> &'static str {
        "evolve an ensemble of initial functions and record density snapshots"
    }

    fn selector(&self) -> Option<(&'static str, &'static str)> {
        Some(("params", "system"))
    }

    fn schema(&self, member: Option<&str>) -> Result<Vec<KeySpec>, String> {
        systems().schema(DDE_ENSEMBLE, member)
    }

    fn prepare(&self, cfg: &RunConfig) -> Result<Box<dyn Job>, RunError> {
        let (p, e, o) = (cfg.params(), cfg.ensemble(), cfg.output());
        let tau = positive("tau", p.f64("tau"))?;
        let field = systems().build(p.str("system"), p)?;
        field.validate()?;
        let m = at_least("steps_per_delay", p.usize("steps_per_delay"), 2)?;
        let spec = ensemble_spec(e)?;
        let n = at_least("n", e.usize("n"), 1)?;
        let ensemble = InitialEnsemble::new(&spec, n, m, tau, cfg.seed)?;
        let (start, end, dt) = (o.f64("snapshot_start"), o.f64("snapshot_end"), o.f64("snapshot_dt"));
        positive("snapshot_dt", dt)?;
        if !(start >= 0.0 && end >= start) {
            return Err(RunError::invalid(format!(
                "snapshot window [{start}, {end}] must satisfy 0 <= start <= end"
            )));
        }
        let times = time_grid(start, end, dt);
        on_grid("snapshot", &times, tau / m as f64)?;
        let bins = at_least("bins", o.usize("bins"), 1)?;
        let binning = match (o.opt_f64("range_lo"), o.opt_f64("range_hi")) {
            (Some(lo), Some(hi)) if hi > lo => Binning::Fixed { lo, hi, bins },
            (None, None) => Binning::Auto { bins },
            _ => return Err(RunError::invalid("`range_lo` and `range_hi` go together, with lo < hi")),
        };
        Ok(Box::new(DdeEnsembleJob {
            field,
            ensemble,
            times,
            binning,
            joint: o.bool("joint"),
            dt,
            period_tol: positive("period_tol", o.f64("period_tol"))?,
            seed: cfg.seed,
        }))
    }
}

impl Job for DdeEnsembleJob {
    fn run(&self, out: &mut Outputs) -> Result<(), RunError> {
        let t_end = *self.times.last().expect("non-empty time grid");
        let snaps = evolve_ensemble_from(&self.ensemble, &self.field, t_end, &self.times, self.binning, self.seed)?;
        out.add("snapshots.csv", ddlab_core::ensemble_lab::snapshots_csv(&snaps));
        if self.joint {
            out.add("joint.csv", ddlab_core::ensemble_lab::joint_csv(&snaps));
        }
        let mut period = String::from("detected,lag,period,distance,mismatch\n");
        match detect_density_period(&snaps, self.dt, self.period_tol) {
            Some(d) => {
                let _ = writeln!(
                    period,
                    "true,{},{},{},{}",
                    d.lag,
                    f(d.period),
                    f(d.distance),
                    f(d.mismatch)
                );
            }
            None => period.push_str("false,,,,\n"),
        }
        out.add("period.csv", period);
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct Gaussian;

const GAUSSIAN: &[KeySpec] = &[
    key("params", "kernel", Str, Required),
    key("params", "a", Float, Required),
    key("params", "b", Float, Required),
    key("params", "tau", Float, Value("1.0")),
    key("params", "t_end", Float, Required),
    key("params", "dt", Float, Value("0.01")),
    // optional covariance slice R_t(s1, s2) on an n × n grid
    key("params", "slice_t", Float, Optional),
    key("params", "slice_n", Int, Value("21")),
    key("output", "dir", Str, Optional),
];

fn linear_params(p: Section<'_>) -> Result<LinearDdeParams, RunError> {
    Ok(LinearDdeParams::new(p.f64("a"), p.f64("b"), positive("tau", p.f64("tau"))?)?)
}

fn kernel_from(p: Section<'_>, tau: f64) -> Result<CovKernel, RunError> {
    let kernel = kernels().build(p.str("kernel"), p)?;
    kernel.check(tau, 33)?;
    Ok(kernel)
}

fn horizon(name: &str, t: f64, tau: f64) -> Result<f64, RunError> {
    if (0.0..=MAX_HORIZON_DELAYS * tau).contains(&t) {
        Ok(t)
    } else {
        Err(RunError::invalid(format!(
            "`{name}` = {t} must lie in [0, {}]",
            MAX_HORIZON_DELAYS * tau
        )))
    }
}

struct GaussianJob {
    kernel: CovKernel,
    params: LinearDdeParams,
    t_end: f64,
    dt: f64,
    slice: Option<(f64, usize)>,
}

impl Experiment for Gaussian {
    fn kind(&self) -> &'static str {
        "gaussian"
    }

    fn about(&self) -> &'static str {
        "propagate a Gaussian initial measure through a linear delay equation"
    }

    fn selector(&self) -> Option<(&'static str, &'static str)> {
        Some(("params", "kernel"))
    }

    fn schema(&self, member: Option<&str>) -> Result<Vec<KeySpec>, String> {
        kernels().schema(GAUSSIAN, member)
    }

    fn prepare(&self, cfg: &RunConfig) -> Result<Box<dyn Job>, RunError> {
        let p = cfg.params();
        let params = linear_params(p)?;
        let kernel = kernel_from(p, params.tau)?;
        let t_end = horizon("t_end", p.f64("t_end"), params.tau)?;
        let dt = positive("dt", p.f64("dt"))?;
        if t_end / dt < 2.0 {
            return Err(RunError::invalid("`t_end` must span at least two `dt` steps"));
        }
        let slice = match p.opt_f64("slice_t") {
            Some(t) => Some((horizon("slice_t", t, params.tau)?, at_least("slice_n", p.usize("slice_n"), 2)?)),
            None => None,
        };
        Ok(Box::new(GaussianJob {
            kernel,
            params,
            t_end,
            dt,
            slice,
        }))
    }
}

impl Job for GaussianJob {
    fn run(&self, out: &mut Outputs) -> Result<(), RunError> {
        let curve = sigma2_curve(&self.kernel, &self.params, self.t_end, self.dt)?;
        out.add("sigma2.csv", sigma2_csv(&curve));
        let st = hayes_stable(&self.params)?;
        let verdict = match st.verdict {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Boundary => "boundary",
        };
        let [m1, m2, m3] = st.margins;
        out.add(
            "stability.csv",
            format!(
                "verdict,margin1,margin2,margin3,kappa\n{verdict},{},{},{},{}\n",
                f(m1),
                f(m2),
                f(m3),
                f(st.kappa)
            ),
        );
        let s = GaussianState::from_kernel(&self.kernel, &self.params, self.t_end)?;
        out.add(
            "state.csv",
            format!(
                "t,sigma2_t,sigma2_lag,cross\n{},{},{},{}\n",
                f(s.t),
                f(s.sigma2_t),
                f(s.sigma2_lag),
                f(s.cross)
            ),
        );
        if let Some((t, n)) = self.slice {
            out.add("r_slice.csv", r_slice_csv(&self.kernel, &self.params, t, n)?);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct Brownian;

const BROWNIAN: &[KeySpec] = &[
    key("params", "gamma", Float, Value("1.0")),
    key("params", "beta", Float, Required),
    key("params", "forcing", Float, Value("1.0")),
    key("params", "t_end", Float, Value("500.0")),
    key("params", "steps_per_delay", Int, Value("128")),
    // keep every n-th integration step
    key("params", "every", Int, Value("16")),
    key("params", "burn_in", Float, Value("50.0")),
    key("ensemble", "n", Int, Value("500")),
    key("ensemble", "v_lo", Float, Value("-0.2")),
    key("ensemble", "v_hi", Float, Value("0.2")),
    key("output", "dir", Str, Optional),
    key("output", "bins", Int, Value("100")),
];

struct BrownianJob {
    field: BrownianDde,
    spec: InitialEnsembleSpec,
    n: usize,
    m: usize,
    t_end: f64,
    every: usize,
    burn_in: f64,
    bins: usize,
    seed: u64,
}

impl Experiment for Brownian {
    fn kind(&self) -> &'static str {
        "brownian"
    }

    fn about(&self) -> &'static str {
        "deterministic Brownian motion from a delayed velocity equation"
    }

    fn schema(&self, _: Option<&str>) -> Result<Vec<KeySpec>, String> {
        Ok(BROWNIAN.to_vec())
    }

    fn prepare(&self, cfg: &RunConfig) -> Result<Box<dyn Job>, RunError> {
        let (p, e, o) = (cfg.params(), cfg.ensemble(), cfg.output());
        let field = BrownianDde {
            gamma: p.f64("gamma"),
            beta: p.f64("beta"),
            forcing: p.f64("forcing"),
        };
        field.validate()?;
        let spec = InitialEnsembleSpec::IidUniformPath {
            lo: e.f64("v_lo"),
            hi: e.f64("v_hi"),
        };
        spec.validate()?;
        let m = at_least("steps_per_delay", p.usize("steps_per_delay"), 2)?;
        let every = at_least("every", p.usize("every"), 1)?;
        let t_end = positive("t_end", p.f64("t_end"))?;
        on_grid("t_end", &[t_end], field.tau() / m as f64)?;
        Ok(Box::new(BrownianJob {
            field,
            spec,
            n: at_least("n", e.usize("n"), 1)?,
            m,
            t_end,
            every,
            burn_in: p.f64("burn_in"),
            bins: at_least("bins", o.usize("bins"), 1)?,
            seed: cfg.seed,
        }))
    }
}

impl Job for BrownianJob {
    fn run(&self, out: &mut Outputs) -> Result<(), RunError> {
        let hist = sample_velocity_histories(&self.spec, self.n, self.m, self.field.tau(), self.seed)?;
        let trajs = simulate_brownian(&self.field, &hist, self.t_end, self.every)?;
        drop(hist);
        let msd = msd_curve(&trajs)?;
        let mut csv = String::from("t,msd\n");
        for (t, v) in msd.t.iter().zip(&msd.msd) {
            let _ = writeln!(csv, "{},{}", f(*t), f(*v));
        }
        out.add("msd.csv", csv);

        let stats = velocity_stats(&trajs, self.burn_in)?;
        let (t0, step) = (trajs[0].t0, trajs[0].step);
        let v: Vec<f64> = trajs
            .iter()
            .flat_map(|tr| {
                tr.states
                    .iter()
                    .enumerate()
                    .filter(move |(i, _)| t0 + *i as f64 * step >= self.burn_in)
                    .map(|(_, s)| s[1])
            })
            .collect();
        let (lo, hi) = Histogram::auto_range(&v)?;
        let h = Histogram::from_samples(&v, lo, hi, self.bins)?;
        let mut csv = String::from("bin_left,bin_right,density\n");
        for (i, d) in h.densities().iter().enumerate() {
            let (l, r) = h.edges(i);
            let _ = writeln!(csv, "{},{},{}", f(l), f(r), f(*d));
        }
        out.add("velocity_hist.csv", csv);

        let (g, b) = (self.field.gamma, self.field.beta);
        out.add(
            "summary.csv",
            format!(
                "samples,mean,std,max_abs,std_law,bound,gaussian_c,gaussian_r2,msd_slope,msd_r2\n{},{},{},{},{},{},{},{},{},{}\n",
                stats.n,
                f(stats.mean),
                f(stats.std),
                f(stats.max_abs),
                f(velocity_std_law(b, g)),
                f(velocity_bound(b, g)),
                f(stats.gaussian_c),
                f(stats.gaussian_r2),
                f(msd.fit.slope),
                f(msd.fit.r2)
            ),
        );
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct Kicked;

const KICKED: &[KeySpec] = &[
    key("params", "gamma", Float, Value("1.0")),
    key("params", "taus", FloatList, Value("[0.2, 0.1, 0.05]")),
    key("params", "n_kicks", Int, Value("20000")),
    key("params", "members", Int, Value("200")),
    // centered | identity
    key("params", "observable", Str, Value("centered")),
    key("params", "fp_cells", Int, Value("4096")),
    key("params", "fp_iterations", Int, Value("20")),
    key("output", "dir", Str, Optional),
];

struct KickedJob {
    gamma: f64,
    taus: Vec<f64>,
    n_kicks: usize,
    members: usize,
    observable: Observable,
    fp_cells: usize,
    fp_iterations: usize,
}

impl Experiment for Kicked {
    fn kind(&self) -> &'static str {
        "kicked"
    }

    fn about(&self) -> &'static str {
        "velocity kicks from the full tent map and their Ornstein–Uhlenbeck limit"
    }

    fn schema(&self, _: Option<&str>) -> Result<Vec<KeySpec>, String> {
        Ok(KICKED.to_vec())
    }

    fn prepare(&self, cfg: &RunConfig) -> Result<Box<dyn Job>, RunError> {
        let p = cfg.params();
        let taus = p.f64s("taus").to_vec();
        for &t in &taus {
            positive("taus", t)?;
        }
        if taus.is_empty() || taus.windows(2).any(|w| w[1] >= w[0]) {
            return Err(RunError::invalid("`taus` must be a non-empty decreasing list"));
        }
        let observable = match p.str("observable") {
            "centered" => Observable::Centered,
            "identity" => Observable::Identity,
            other => {
                return Err(RunError::invalid(format!(
                    "unknown observable `{other}`; expected centered or identity"
                )))
            }
        };
        Ok(Box::new(KickedJob {
            gamma: positive("gamma", p.f64("gamma"))?,
            taus,
            n_kicks: at_least("n_kicks", p.usize("n_kicks"), 3)?,
            members: at_least("members", p.usize("members"), 2)?,
            observable,
            fp_cells: at_least("fp_cells", p.usize("fp_cells"), 2)?,
            fp_iterations: p.usize("fp_iterations"),
        }))
    }
}

impl Job for KickedJob {
    fn run(&self, out: &mut Outputs) -> Result<(), RunError> {
        let report = ou_limit_suite(self.gamma, &self.taus, self.n_kicks, self.members, &self.observable)?;
        out.add("ou_report.csv", report.to_csv());
        out.add(
            "ou_summary.csv",
            format!(
                "variance_cauchy,normality_improves\n{},{}\n",
                report.variance_cauchy, report.normality_improves
            ),
        );
        let h = self.observable.tabulate(self.fp_cells);
        let norms = fp_decay_check(&MapSpec::Hat { a: 2.0 }, &h, self.fp_iterations)?;
        let mut csv = String::from("t,l1_norm\n");
        for (t, n) in norms.iter().enumerate() {
            let _ = writeln!(csv, "{},{}", t + 1, f(*n));
        }
        out.add("fp_decay.csv", csv);
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct Compare;

const COMPARE: &[KeySpec] = &[
    key("params", "kernel", Str, Required),
    key("params", "a", Float, Required),
    key("params", "b", Float, Required),
    key("params", "tau", Float, Value("1.0")),
    key("params", "times", FloatList, Value("[0.25, 0.5, 1.0]")),
    key("params", "steps_per_delay", Int, Value("512")),
    key("ensemble", "n", Int, Value("200000")),
    key("output", "dir", Str, Optional),
];

struct CompareJob {
    kernel: CovKernel,
    params: LinearDdeParams,
    ensemble: InitialEnsemble,
    times: Vec<f64>,
    seed: u64,
}

impl Experiment for Compare {
    fn kind(&self) -> &'static str {
        "compare"
    }

    fn about(&self) -> &'static str {
        "analytic variance of a Gaussian ensemble against Monte Carlo"
    }

    fn selector(&self) -> Option<(&'static str, &'static str)> {
        Some(("params", "kernel"))
    }

    fn schema(&self, member: Option<&str>) -> Result<Vec<KeySpec>, String> {
        kernels().schema(COMPARE, member)
    }

    fn prepare(&self, cfg: &RunConfig) -> Result<Box<dyn Job>, RunError> {
        let (p, e) = (cfg.params(), cfg.ensemble());
        let params = linear_params(p)?;
        let kernel = kernel_from(p, params.tau)?;
        let m = at_least("steps_per_delay", p.usize("steps_per_delay"), 2)?;
        let times = p.f64s("times").to_vec();
        if times.is_empty() || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(RunError::invalid("`times` must be a non-empty non-decreasing list"));
        }
        for &t in &times {
            horizon("times", t, params.tau)?;
        }
        on_grid("times", &times, params.tau / m as f64)?;
        let n = at_least("n", e.usize("n"), 2)?;
        let spec = InitialEnsembleSpec::GaussianHistory(kernel.clone());
        let ensemble = InitialEnsemble::new(&spec, n, m, params.tau, cfg.seed)?;
        Ok(Box::new(CompareJob {
            kernel,
            params,
            ensemble,
            times,
            seed: cfg.seed,
        }))
    }
}

impl Job for CompareJob {
    fn run(&self, out: &mut Outputs) -> Result<(), RunError> {
        let field = DdeField::linear(self.params.a, self.params.b, self.params.tau);
        let samples = sample_ensemble_from(&self.ensemble, &field, &self.times, 0, self.seed)?;
        let mut csv = String::from("t,sigma2_analytic,sigma2_mc,mc_stderr\n");
        for (k, &t) in self.times.iter().enumerate() {
            let analytic = r_t(&self.kernel, &self.params, t, 0.0, 0.0)?;
            let m = Moments::of(&samples.x[k])?;
            let _ = writeln!(csv, "{},{},{},{}", f(t), f(analytic), f(m.var), f(m.var_stderr()));
        }
        out.add("compare.csv", csv);
        Ok(())
    }
}
