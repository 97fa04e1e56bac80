//! Run configuration and the end-to-end drivers behind the command line:
//! classical reference integration, factor-flow runs at any fidelity, and
//! trajectory comparison.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{QsvdError, Result};
use crate::matcore::MatR;
use crate::models::{synthetic_generator, two_state_generator, RateModel, RateParams};
use crate::odeflow::{grid_time, integrate, seed_factors, Generator};
use crate::qsim::{
    derive_seed, dilation_circuit, qsvd_step, Backend, Fidelity, NoiseSpec, QuantumState, Role, StepSettings,
};
use crate::svdeom::{reconstruct_phi, seed_history, SvdFactors};
use crate::tolerance::Tolerances;

/// Generator selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoState { k_da: RateParams, k_ad: RateParams },
    Synthetic { n: usize, seed: u64, smoothness: f64 },
}

impl Default for ModelSpec {
    fn default() -> Self {
        let m = RateModel::demo();
        ModelSpec::TwoState { k_da: m.k_da, k_ad: m.k_ad }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn Generator<f64> + Send>> {
        match *self {
            ModelSpec::TwoState { k_da, k_ad } => Ok(Box::new(two_state_generator(RateModel { k_da, k_ad })?)),
            ModelSpec::Synthetic { n, seed, smoothness } => {
                Ok(Box::new(synthetic_generator(n, seed, smoothness).map_err(|e| QsvdError::Config(e.to_string()))?))
            }
        }
    }
}

/// Everything a run depends on. Missing fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Start of the factor flow; seeds sit at `t_seed − 2h`, `t_seed − h`, `t_seed`.
    pub t_seed: f64,
    pub t_f: f64,
    pub n_steps: usize,
    pub n_shots: u64,
    pub mode: Fidelity,
    pub noise: NoiseSpec,
    pub rng_seed: u64,
    pub tolerances: Tolerances,
    /// Project `U` and `V` onto the orthogonal group after every step.
    pub project: bool,
    /// RK2 substeps for each seed propagator on `[0, t]`.
    pub seed_substeps: usize,
    /// RK2 substeps per output step of the reference trajectory.
    pub reference_substeps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSpec::default(),
            t_seed: 50.0,
            t_f: 1e4,
            n_steps: 400,
            n_shots: 1_000_000,
            mode: Fidelity::Exact,
            noise: NoiseSpec::NONE,
            rng_seed: 0,
            tolerances: Tolerances::default(),
            project: false,
            seed_substeps: 500,
            reference_substeps: 10,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QsvdError::Config(format!("config: {e}")))
    }

    pub fn from_reader(r: impl Read) -> Result<Self> {
        serde_json::from_reader(r).map_err(|e| QsvdError::Config(format!("config: {e}")))
    }

    pub fn step(&self) -> f64 {
        (self.t_f - self.t_seed) / self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(QsvdError::Config(m));
        if !(self.t_seed.is_finite() && self.t_f.is_finite() && self.t_seed < self.t_f) {
            return bad(format!("need t_seed < t_f, got t_seed = {}, t_f = {}", self.t_seed, self.t_f));
        }
        if self.n_steps < 3 {
            return bad(format!("n_steps must be at least 3, got {}", self.n_steps));
        }
        if !(self.t_seed - 2.0 * self.step() > 0.0) {
            return bad(format!(
                "first seed time t_seed - 2h = {} must be positive; raise t_seed or n_steps",
                self.t_seed - 2.0 * self.step()
            ));
        }
        if self.n_shots == 0 {
            return bad("n_shots must be at least 1".into());
        }
        if self.seed_substeps == 0 || self.reference_substeps == 0 {
            return bad("substep counts must be at least 1".into());
        }
        let t = &self.tolerances;
        for (name, x) in [
            ("degeneracy", t.degeneracy),
            ("saturation", t.saturation),
            ("imag_residue", t.imag_residue),
            ("unitarity", t.unitarity),
            ("sign_floor_factor", t.sign_floor_factor),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return bad(format!("tolerance {name} must be finite and nonnegative, got {x}"));
            }
        }
        self.noise.validate()?;
        if let ModelSpec::TwoState { k_da, k_ad } = self.model {
            RateModel { k_da, k_ad }.validate()?;
        }
        Ok(())
    }

    pub fn backend(&self) -> Backend {
        Backend { fidelity: self.mode, n_shots: self.n_shots, noise: self.noise, tol: self.tolerances }
    }
}

/// First and second components of `v`; populations for the two-state model.
fn pair(v: &[f64]) -> (f64, f64) {
    (v[0], v.get(1).copied().unwrap_or(0.0))
}

/// `e₁`, the initial condition `P_D(0) = 1`.
fn initial_vector(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceRecord {
    pub t: f64,
    #[serde(rename = "P_D_ref")]
    pub p_d: f64,
    #[serde(rename = "P_A_ref")]
    pub p_a: f64,
}

/// RK2 reference on the output grid `t_seed + i·h`, `i = 0..=n_steps`.
pub fn run_reference(cfg: &RunConfig) -> Result<Vec<ReferenceRecord>> {
    cfg.validate()?;
    let g = cfg.model.build()?;
    reference_on_grid(cfg, &*g)
}

fn reference_on_grid(cfg: &RunConfig, g: &dyn Generator<f64>) -> Result<Vec<ReferenceRecord>> {
    let v0 = initial_vector(g.dim());
    let head = integrate(g, &v0, 0.0, cfg.t_seed, cfg.seed_substeps)?;
    let sub = cfg.reference_substeps;
    let mut v = head.last().to_vec();
    let mut out = Vec::with_capacity(cfg.n_steps + 1);
    let (p_d, p_a) = pair(&v);
    out.push(ReferenceRecord { t: cfg.t_seed, p_d, p_a });
    for i in 0..cfg.n_steps {
        let t0 = grid_time(cfg.t_seed, cfg.t_f, cfg.n_steps, i);
        let t1 = grid_time(cfg.t_seed, cfg.t_f, cfg.n_steps, i + 1);
        let seg = integrate(g, &v, t0, t1, sub).map_err(|e| {
            let inner = e.step().unwrap_or(1);
            e.root().clone().at_step(i * sub + inner)
        })?;
        v = seg.last().to_vec();
        let (p_d, p_a) = pair(&v);
        out.push(ReferenceRecord { t: t1, p_d, p_a });
    }
    Ok(out)
}

/// One row of a factor-flow trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    #[serde(rename = "P_D_ref")]
    pub p_d_ref: f64,
    #[serde(rename = "P_A_ref")]
    pub p_a_ref: f64,
    #[serde(rename = "P_D_qsvd")]
    pub p_d_qsvd: f64,
    #[serde(rename = "P_A_qsvd")]
    pub p_a_qsvd: f64,
    pub sigma1: f64,
    #[serde(rename = "ortho_err_U")]
    pub ortho_err_u: f64,
    #[serde(rename = "ortho_err_V")]
    pub ortho_err_v: f64,
    /// `max_j | |σ⁺ⱼ| − 1 |`.
    pub sigma_mod_err: f64,
    /// Post-selection acceptance of the dilation circuit for `v(0)`.
    pub acceptance_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: Fidelity,
    pub n_steps: usize,
    pub n_shots: u64,
    pub rng_seed: u64,
    pub project: bool,
    pub max_abs_dev_p_d: f64,
    pub mean_abs_dev_p_d: f64,
    pub max_abs_dev_p_a: f64,
    pub terminal_dev_p_d: f64,
    pub max_ortho_err_u: f64,
    pub max_ortho_err_v: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct QsvdRun {
    pub records: Vec<TrajectoryRecord>,
    pub summary: RunSummary,
    pub final_factors: SvdFactors<f64>,
}

/// Seed, step and reconstruct over `[t_seed, t_f]`.
pub fn run_qsvd(cfg: &RunConfig) -> Result<QsvdRun> {
    cfg.validate()?;
    let g = cfg.model.build()?;
    run_qsvd_with(cfg, &*g)
}

/// As [`run_qsvd`] with an explicit generator; `cfg.model` is ignored.
pub fn run_qsvd_with(cfg: &RunConfig, g: &dyn Generator<f64>) -> Result<QsvdRun> {
    let start = Instant::now();
    let tol = cfg.tolerances;
    let h = cfg.step();
    let reference = reference_on_grid(cfg, g)?;
    let seeds = seed_factors(g, cfg.t_seed, h, cfg.seed_substeps, &tol)?;
    let mut history = seed_history(&seeds[0], &seeds[1], g, &tol)?;
    let mut state = QuantumState::from_factors(&seeds[2]);
    let settings = StepSettings { backend: cfg.backend(), project: cfg.project, rng_seed: cfg.rng_seed };
    let v0 = initial_vector(g.dim());

    let mut records = Vec::with_capacity(cfg.n_steps + 1);
    records.push(record(&state, &reference[0], &v0, cfg, 0)?);
    for step in 1..=cfg.n_steps {
        let out = qsvd_step(&state, &history, g, h, step as u64, &settings).map_err(|e| e.at_step(step))?;
        history.push(out.snapshot);
        state = out.state;
        state.t = grid_time(cfg.t_seed, cfg.t_f, cfg.n_steps, step);
        records.push(record(&state, &reference[step], &v0, cfg, step).map_err(|e| e.at_step(step))?);
    }
    let summary = summarize(cfg, &records, start.elapsed().as_secs_f64());
    Ok(QsvdRun { records, summary, final_factors: state.factors() })
}

fn record(
    state: &QuantumState,
    r: &ReferenceRecord,
    v0: &[f64],
    cfg: &RunConfig,
    step: usize,
) -> Result<TrajectoryRecord> {
    let f = state.factors();
    let phi = reconstruct_phi(&f, &cfg.tolerances)?;
    let (p_d, p_a) = pair(&phi.matvec(v0));
    let dil = dilation_circuit(v0, &f, &cfg.backend(), derive_seed(cfg.rng_seed, step as u64, Role::Dilation, 0))?;
    let sigma_mod_err = f.sigma_plus.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    let rec = TrajectoryRecord {
        t: state.t,
        p_d_ref: r.p_d,
        p_a_ref: r.p_a,
        p_d_qsvd: p_d,
        p_a_qsvd: p_a,
        sigma1: f.sigma1,
        ortho_err_u: f.u.orthogonality_error(),
        ortho_err_v: f.v.orthogonality_error(),
        sigma_mod_err,
        acceptance_rate: dil.acceptance,
    };
    let finite = [p_d, p_a, rec.sigma1, rec.ortho_err_u, rec.ortho_err_v, sigma_mod_err, dil.acceptance]
        .iter()
        .all(|x| x.is_finite());
    if !finite {
        return Err(QsvdError::NumericalOverflow { t: state.t });
    }
    Ok(rec)
}

fn summarize(cfg: &RunConfig, records: &[TrajectoryRecord], wall: f64) -> RunSummary {
    let dev_d: Vec<f64> = records.iter().map(|r| (r.p_d_qsvd - r.p_d_ref).abs()).collect();
    let dev_a = records.iter().map(|r| (r.p_a_qsvd - r.p_a_ref).abs());
    RunSummary {
        mode: cfg.mode,
        n_steps: cfg.n_steps,
        n_shots: cfg.n_shots,
        rng_seed: cfg.rng_seed,
        project: cfg.project,
        max_abs_dev_p_d: dev_d.iter().copied().fold(0.0, f64::max),
        mean_abs_dev_p_d: dev_d.iter().sum::<f64>() / dev_d.len() as f64,
        max_abs_dev_p_a: dev_a.fold(0.0, f64::max),
        terminal_dev_p_d: *dev_d.last().unwrap_or(&0.0),
        max_ortho_err_u: records.iter().map(|r| r.ortho_err_u).fold(0.0, f64::max),
        max_ortho_err_v: records.iter().map(|r| r.ortho_err_v).fold(0.0, f64::max),
        wall_time_s: wall,
    }
}

fn csv_err(e: impl std::fmt::Display) -> QsvdError {
    QsvdError::InvalidInput(format!("csv: {e}"))
}

/// Write records with a header row. Floats use the shortest round-trip
/// representation, so identical runs give identical bytes.
pub fn write_csv<T: Serialize>(w: impl Write, rows: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush().map_err(csv_err)
}

/// Numeric table read back from a trajectory file.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(r: impl Read) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        if headers.first().map(String::as_str) != Some("t") {
            return Err(QsvdError::InvalidInput("trajectory file must start with a `t` column".into()));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| QsvdError::InvalidInput(format!("bad number `{s}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Table { headers, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnMetrics {
    pub max_abs: f64,
    pub rms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub common_times: usize,
    pub columns: BTreeMap<String, ColumnMetrics>,
}

/// Deviation per column on the times present in both tables.
///
/// Every column name shared by both files is compared. In addition `P_D`
/// and `P_A` compare each file's `_qsvd` column, or its `_ref` column when
/// there is none.
pub fn compare(a: &Table, b: &Table) -> Result<CompareReport> {
    let times_b: Vec<f64> = b.rows.iter().map(|r| r[0]).collect();
    let mut pairs = Vec::new();
    for (i, ra) in a.rows.iter().enumerate() {
        let t = ra[0];
        let scale = t.abs().max(1.0);
        if let Some(j) = times_b.iter().position(|&tb| (tb - t).abs() <= 1e-9 * scale) {
            pairs.push((i, j));
        }
    }
    let mut cols: Vec<(String, usize, usize)> = Vec::new();
    for (ia, name) in a.headers.iter().enumerate().skip(1) {
        if let Some(ib) = b.column(name) {
            cols.push((name.clone(), ia, ib));
        }
    }
    for p in ["P_D", "P_A"] {
        let pick = |t: &Table| t.column(&format!("{p}_qsvd")).or_else(|| t.column(&format!("{p}_ref")));
        if let (Some(ia), Some(ib)) = (pick(a), pick(b)) {
            cols.push((p.to_owned(), ia, ib));
        }
    }
    let mut columns = BTreeMap::new();
    for (name, ia, ib) in cols {
        let mut max_abs: f64 = 0.0;
        let mut sq = 0.0;
        for &(i, j) in &pairs {
            let d = (a.rows[i][ia] - b.rows[j][ib]).abs();
            max_abs = max_abs.max(d);
            sq += d * d;
        }
        let rms = if pairs.is_empty() { 0.0 } else { (sq / pairs.len() as f64).sqrt() };
        columns.insert(name, ColumnMetrics { max_abs, rms });
    }
    Ok(CompareReport { common_times: pairs.len(), columns })
}

/// gnuplot commands plotting the population columns of `csv_path`.
pub fn gnuplot_script(csv_path: &str, headers: &[&str]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str("set xlabel 't (au)'\nset ylabel 'population'\n");
    let plots: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("P_"))
        .map(|(i, _)| format!("'{csv_path}' using 1:{} with lines", i + 1))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

pub const REFERENCE_HEADERS: [&str; 3] = ["t", "P_D_ref", "P_A_ref"];
pub const TRAJECTORY_HEADERS: [&str; 10] = [
    "t",
    "P_D_ref",
    "P_A_ref",
    "P_D_qsvd",
    "P_A_qsvd",
    "sigma1",
    "ortho_err_U",
    "ortho_err_V",
    "sigma_mod_err",
    "acceptance_rate",
];

/// Result of one built-in invariant check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick invariant suite: linear algebra, extrapolation, dilation and a
/// short exact-versus-classical run.
pub fn selftest() -> Vec<Check> {
    use crate::matcore::{cayley, svd};
    use crate::qsim::dilation_statevector;
    use crate::svdeom::mpea;

    let mut out = Vec::new();
    let mut push = |name, value: f64, limit: f64| {
        out.push(Check { name, passed: value <= limit, detail: format!("{value:.3e} <= {limit:.0e}") });
    };

    let s = MatR::from_fn(4, 4, |i, j| (i as f64 - j as f64) * (0.3 + 0.1 * (i + j) as f64));
    let q = cayley(&s, 0.7);
    push("cayley orthogonality", q.map(|q| q.orthogonality_error()).unwrap_or(f64::INFINITY), 1e-12);

    let m = MatR::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
    let r = svd(&m);
    push("svd reconstruction", r.map(|r| (&r.reconstruct() - &m).max_abs()).unwrap_or(f64::INFINITY), 1e-12);

    let f = |t: f64| MatR::from_fn(3, 3, |i, j| 0.5 * t * (i as f64 + 1.0) - j as f64);
    let (t, h) = (2.0, 0.3);
    let e = mpea(&f(t), &f(t - h), &f(t - 2.0 * h)).map(|x| (&x - &f(t + h / 2.0)).max_abs());
    push("mpea affine exactness", e.unwrap_or(f64::INFINITY), 1e-12);

    let phi = MatR::from_rows(&[&[0.7, -0.2], &[0.1, 0.4]]);
    let dil = svd(&phi).and_then(|r| SvdFactors::from_parts(0.0, r.u, r.v, &r.s)).and_then(|fs| {
        let v0 = [0.6, 0.8];
        let (amps, _) = dilation_statevector(&v0, &fs, 1e-10)?;
        let target = phi.matvec(&v0);
        Ok(amps.iter().zip(&target).map(|(a, t)| (a - t / fs.sigma1).norm()).fold(0.0, f64::max))
    });
    push("dilation equivalence", dil.unwrap_or(f64::INFINITY), 1e-10);

    let short = |mode| RunConfig { n_steps: 400, mode, ..RunConfig::default() };
    let dev = run_qsvd(&short(Fidelity::Exact)).and_then(|a| {
        let b = run_qsvd(&short(Fidelity::Classical))?;
        Ok(a.records.iter().zip(&b.records).map(|(x, y)| (x.p_d_qsvd - y.p_d_qsvd).abs()).fold(0.0, f64::max))
    });
    push("exact circuits match classical flow", dev.unwrap_or(f64::INFINITY), 1e-10);

    let demo = run_qsvd(&short(Fidelity::Exact)).map(|r| r.summary.max_abs_dev_p_d);
    push("demo run matches reference", demo.unwrap_or(f64::INFINITY), 1e-3);
    out
}
