//! One pipeline per subcommand. Each writes its tables, a `quantities.csv`
//! for `compare`, and a manifest into `<out>/<subcommand>/`.

use std::path::{Path, PathBuf};

use tdpt_core::dirac::{assemble_h1, euler_norm_demo, first_order_amplitude, gauge_sensitivity, integrate_rk4};
use tdpt_core::fields::physical_fields;
use tdpt_core::hilbert::{expectation, Vector};
use tdpt_core::oracle::{apply_gauge_phase, propagate};
use tdpt_core::quadrature::QuadraturePolicy;
use tdpt_core::quasicanon::{build_observable, evolve_expectation, poisson_form_check, verify_unperturbed_invariance, INVARIANCE_TOLERANCE};
use tdpt_core::soperator::{compare_s_matrices, s_matrix, SEntry};
use tdpt_core::State;

use crate::config::{DiracConfig, ExperimentConfig, OracleConfig, Resolved};
use crate::error::CliError;
use crate::output::{create_dir, final_label, num, transition_label, write_manifest, ManifestInput, Quantities, Table};

pub const PERTURBATIVE: [&str; 3] = ["dirac", "quasicanon", "soperator"];

/// Shared inputs of a single-module run.
pub struct Job<'a> {
    pub config: &'a ExperimentConfig,
    pub resolved: &'a Resolved,
    pub out: &'a Path,
    pub seed: Option<u64>,
    pub verbose: bool,
}

impl Job<'_> {
    fn dir(&self, sub: &str) -> Result<PathBuf, CliError> {
        let d = self.out.join(sub);
        create_dir(&d)?;
        Ok(d)
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("tdpt: {}", msg.as_ref());
        }
    }

    fn manifest(&self, dir: &Path, sub: &str, notes: &[String]) -> Result<(), CliError> {
        write_manifest(
            dir,
            ManifestInput {
                subcommand: sub,
                seed: self.seed,
                config: self.config,
                basis_dim: self.resolved.basis.dim(),
                interior_dim: self.resolved.basis.interior_dim(),
                notes,
            },
        )?;
        Ok(())
    }

    fn horizon(&self) -> f64 {
        self.config.time.horizon
    }
}

pub fn dirac(job: &Job<'_>) -> Result<(), CliError> {
    let dir = job.dir("dirac")?;
    let r = job.resolved;
    let b = &r.basis;
    let settings = job.config.dirac.clone().unwrap_or(DiracConfig { include_a2: false, euler_steps: 0, dt: None });
    let h1 = assemble_h1(&r.field, b, settings.include_a2)?.total();
    let t_end = job.horizon();
    let policy = QuadraturePolicy::default();
    let mut notes = Vec::new();
    let mut quantities = Quantities::default();

    if let Some(k) = r.initial_index {
        job.log(format!("dirac: first-order amplitudes from state {k}"));
        let mut t = Table::new(["k", "n", "omega_nk", "amplitude_re", "amplitude_im", "probability"]);
        for n in (0..b.interior_dim()).filter(|&n| n != k) {
            let a = first_order_amplitude(&h1, b, k, n, t_end, &policy)?;
            t.push(vec![k.to_string(), n.to_string(), num(b.omega_nk(n, k)), num(a.re), num(a.im), num(a.norm_sqr())]);
            quantities.push(transition_label(k, n), a.norm_sqr());
        }
        t.write(&dir.join("first_order.csv"))?;

        if settings.euler_steps > 0 {
            let dt = job.config.dirac_dt();
            let norms = euler_norm_demo(&h1, b, k, dt, settings.euler_steps)?;
            let mut t = Table::new(["step", "t", "norm_sqr", "norm_sqr_minus_1"]);
            for (j, n) in norms.iter().enumerate() {
                t.push(vec![j.to_string(), num(j as f64 * dt), num(*n), num(n - 1.0)]);
            }
            t.write(&dir.join("euler.csv"))?;
        }

        if let Some(f) = &r.gauge {
            let mut t = Table::new(["k", "n", "p_original", "p_transformed", "rel_diff"]);
            for n in (0..b.interior_dim()).filter(|&n| n != k) {
                let (p0, p1) = gauge_sensitivity(&r.original_field, f, b, k, n, t_end, settings.include_a2)?;
                let big = p0.abs().max(p1.abs());
                let rel = if big == 0.0 { 0.0 } else { (p0 - p1).abs() / big };
                t.push(vec![k.to_string(), n.to_string(), num(p0), num(p1), num(rel)]);
            }
            t.write(&dir.join("gauge_sensitivity.csv"))?;
        }
    } else {
        notes.push("initial state is not a single eigenstate: first-order tables skipped".into());
    }

    job.log("dirac: rk4 coefficient integration");
    let c0: Vector = r.state.coeffs().rows(0, b.interior_dim()).into_owned();
    let traj = integrate_rk4(&h1, b, &c0, t_end, job.config.dirac_dt())?;
    let mut header = vec!["t".to_string(), "norm_sqr".to_string()];
    header.extend((0..b.interior_dim()).map(|n| format!("p{n}")));
    let mut t = Table::new(header);
    for (time, c) in traj.times.iter().zip(&traj.coeffs) {
        let mut row = vec![num(*time), num(c.norm_squared())];
        row.extend(c.iter().map(|z| num(z.norm_sqr())));
        t.push(row);
    }
    t.write(&dir.join("coefficients.csv"))?;
    notes.push(format!("rk4 norm drift {:e}", traj.norm_drift()));

    quantities.write(&dir)?;
    job.manifest(&dir, "dirac", &notes)
}

pub fn quasicanon(job: &Job<'_>) -> Result<(), CliError> {
    let dir = job.dir("quasicanon")?;
    let r = job.resolved;
    let b = &r.basis;
    let fields = physical_fields(&r.field, b.constants());
    let mut notes = Vec::new();
    if fields.has_impulses() {
        notes.push("fields carry impulsive terms; they are excluded from the rate operators".into());
    }
    let mut inv = Table::new(["observable", "residual", "admissible"]);
    let mut admissible = Vec::new();
    for spec in &r.observables {
        let residual = verify_unperturbed_invariance(&build_observable(spec, b)?, b)?;
        let ok = residual <= INVARIANCE_TOLERANCE;
        inv.push(vec![spec.name.clone(), num(residual), ok.to_string()]);
        if ok {
            admissible.push(spec);
        } else {
            notes.push(format!("observable `{}` is not an invariant of H0 and was skipped", spec.name));
        }
    }
    inv.write(&dir.join("invariance.csv"))?;

    let settings = job.config.quasicanon.clone();
    let mut quantities = Quantities::default();
    let mut columns = Vec::new();
    let mut times = Vec::new();
    for spec in &admissible {
        job.log(format!("quasicanon: evolving {}", spec.name));
        let traj = evolve_expectation(spec, &fields, b, &r.state, job.horizon(), job.config.quasicanon_dt(), job.config.step_rule())?;
        quantities.push(final_label(&spec.name), traj.final_value());
        times = traj.times;
        columns.push(traj.values);
    }
    let mut header = vec!["t".to_string()];
    header.extend(admissible.iter().map(|s| s.name.clone()));
    let mut t = Table::new(header);
    for (j, time) in times.iter().enumerate() {
        let mut row = vec![num(*time)];
        row.extend(columns.iter().map(|c| num(c[j])));
        t.push(row);
    }
    t.write(&dir.join("trajectory.csv"))?;

    let poisson_times = settings.map(|s| s.poisson_times).unwrap_or_default();
    if !poisson_times.is_empty() {
        let mut t = Table::new(["observable", "t", "residual"]);
        for spec in &admissible {
            for &time in &poisson_times {
                t.push(vec![spec.name.clone(), num(time), num(poisson_form_check(spec, &r.field, b, time)?)]);
            }
        }
        t.write(&dir.join("poisson.csv"))?;
    }
    quantities.write(&dir)?;
    job.manifest(&dir, "quasicanon", &notes)
}

pub fn soperator(job: &Job<'_>) -> Result<(), CliError> {
    let dir = job.dir("soperator")?;
    let r = job.resolved;
    let b = &r.basis;
    let settings = job.config.soperator.clone().ok_or_else(|| CliError::Config {
        field: "soperator".into(),
        reason: "the soperator subcommand needs a [soperator] section naming the observable".into(),
    })?;
    let fields = physical_fields(&r.field, b.constants());
    let policy = QuadraturePolicy::default();
    let spec = job.config.observable(b, &settings.observable, "soperator.observable")?;
    job.log(format!("soperator: s-matrix for {}", spec.name));
    let s = s_matrix(&spec, &fields, b, job.horizon(), &policy)?;
    let mut notes = Vec::new();
    if s.excluded_impulses {
        notes.push("fields carry impulsive terms; they are excluded from the rate operators".into());
    }
    let mut t = Table::new(["k", "kp", "defined", "s_re", "s_im", "abs_sqr"]);
    for k in 0..s.dim() {
        for kp in 0..s.dim() {
            match s.entry(k, kp) {
                SEntry::Defined(z) => t.push(vec![k.to_string(), kp.to_string(), "true".into(), num(z.re), num(z.im), num(z.norm_sqr())]),
                SEntry::Undefined => t.push(vec![k.to_string(), kp.to_string(), "false".into(), String::new(), String::new(), String::new()]),
            }
        }
    }
    t.write(&dir.join("s_matrix.csv"))?;

    let mut quantities = Quantities::default();
    if let Some(k) = r.initial_index {
        for n in (0..s.dim()).filter(|&n| n != k) {
            if let SEntry::Defined(z) = s.entry(n, k) {
                quantities.push(transition_label(k, n), z.norm_sqr());
            }
        }
    }
    quantities.write(&dir)?;

    if let Some([a, c]) = &settings.consistency {
        let sa = s_matrix(&job.config.observable(b, a, "soperator.consistency[0]")?, &fields, b, job.horizon(), &policy)?;
        let sc = s_matrix(&job.config.observable(b, c, "soperator.consistency[1]")?, &fields, b, job.horizon(), &policy)?;
        let report = compare_s_matrices(&sa, &sc)?;
        let mut t = Table::new(["k", "kp", &format!("abs_s_{a}"), &format!("abs_s_{c}"), "rel_diff", "verdict"]);
        for row in &report.rows {
            t.push(vec![row.k.to_string(), row.kp.to_string(), num(row.obs_a_abs), num(row.obs_b_abs), num(row.rel_diff), row.verdict.as_str().into()]);
        }
        t.write(&dir.join("consistency.csv"))?;
        notes.push(format!("consistency {a} vs {c}: {} pairs, all equal = {}", report.rows.len(), report.all_equal()));
    }
    job.manifest(&dir, "soperator", &notes)
}

pub fn oracle(job: &Job<'_>) -> Result<(), CliError> {
    let dir = job.dir("oracle")?;
    let r = job.resolved;
    let b = &r.basis;
    let settings = job.config.oracle.clone().unwrap_or(OracleConfig { method: Default::default(), include_a2: true, dt: None });
    let h1 = assemble_h1(&r.field, b, settings.include_a2)?.total();
    job.log("oracle: propagating");
    let prop = propagate(b, &h1, &r.state, job.horizon(), job.config.oracle_dt(), job.config.method())?;
    let mut notes = vec![format!("norm drift {:e}", prop.norm_drift())];
    // Reported quantities refer to the gauge the field was written in.
    let back = |state: &State, t: f64| -> Result<State, CliError> {
        Ok(match &r.gauge {
            Some(f) => apply_gauge_phase(state, f, b, t, -1.0)?,
            None => state.clone(),
        })
    };
    if r.gauge.is_some() {
        notes.push("states are mapped back to the gauge the field was written in before reporting".into());
    }
    let ops = r.observables.iter().map(|s| build_observable(s, b)).collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["t".to_string(), "norm_sqr".to_string()];
    header.extend(r.observables.iter().map(|s| s.name.clone()));
    let mut t = Table::new(header);
    let mut finals = vec![0.0; ops.len()];
    for (time, state) in prop.times.iter().zip(&prop.states) {
        let mut row = vec![num(*time), num(state.norm_sqr())];
        if !ops.is_empty() {
            let s = back(state, *time)?;
            for (j, op) in ops.iter().enumerate() {
                finals[j] = expectation(&s, op)?.re;
                row.push(num(finals[j]));
            }
        }
        t.push(row);
    }
    t.write(&dir.join("trajectory.csv"))?;

    let final_state = back(prop.final_state(), job.horizon())?;
    let mut t = Table::new(["n", "re", "im", "probability"]);
    for (n, z) in final_state.coeffs().iter().enumerate() {
        t.push(vec![n.to_string(), num(z.re), num(z.im), num(z.norm_sqr())]);
    }
    t.write(&dir.join("final_state.csv"))?;

    let mut quantities = Quantities::default();
    if let Some(k) = r.initial_index {
        for n in (0..b.interior_dim()).filter(|&n| n != k) {
            quantities.push(transition_label(k, n), final_state.coeffs()[n].norm_sqr());
        }
    }
    for (spec, v) in r.observables.iter().zip(&finals) {
        quantities.push(final_label(&spec.name), *v);
    }
    quantities.write(&dir)?;
    job.manifest(&dir, "oracle", &notes)
}

/// Joins each perturbative module's quantities with the oracle's into
/// `<out>/compare.csv`. Needs `oracle` and at least one perturbative module.
pub fn compare(out: &Path) -> Result<PathBuf, CliError> {
    let exact = Quantities::read(&out.join("oracle"))?;
    let present: Vec<&str> = PERTURBATIVE.iter().copied().filter(|m| out.join(m).join(Quantities::FILE).is_file()).collect();
    if present.is_empty() {
        return Err(CliError::MissingOutput(out.join("dirac").join(Quantities::FILE)));
    }
    let mut t = Table::new(["quantity", "perturbative", "exact", "abs_diff", "rel_diff"]);
    for module in present {
        let pert = Quantities::read(&out.join(module))?;
        for (name, p) in &pert.0 {
            if let Some((_, e)) = exact.0.iter().find(|(n, _)| n == name) {
                let abs = (p - e).abs();
                let big = p.abs().max(e.abs());
                let rel = if big == 0.0 { 0.0 } else { abs / big };
                t.push(vec![format!("{module}:{name}"), num(*p), num(*e), num(abs), num(rel)]);
            }
        }
    }
    let path = out.join("compare.csv");
    t.write(&path)?;
    Ok(path)
}

/// Runs every module that has a section in the config, then `compare` when
/// the oracle and a perturbative module both ran.
pub fn run_all(job: &Job<'_>) -> Result<(), CliError> {
    let cfg = job.config;
    let mut ran_perturbative = false;
    if cfg.dirac.is_some() {
        dirac(job)?;
        ran_perturbative = true;
    }
    if cfg.quasicanon.is_some() {
        quasicanon(job)?;
        ran_perturbative = true;
    }
    if cfg.soperator.is_some() {
        soperator(job)?;
        ran_perturbative = true;
    }
    if cfg.oracle.is_some() {
        oracle(job)?;
        if ran_perturbative {
            compare(job.out)?;
        }
    }
    Ok(())
}
