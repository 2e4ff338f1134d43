//! One function per experiment. Each returns its CSV tables, the asserted
//! checks and free-form notes; nothing here touches the filesystem.

use qkpz_core::chain::{number_op, Chain, OccupationConfig};
use qkpz_core::classical::{
    height_growth_stats, log_spaced_times, marginals_vs_master, Boundary, ClassicalEnsemble,
    ClassicalState, HopRates, SampleOptions,
};
use qkpz_core::collision::{
    convergence_study_with, sample_trajectory, AncillaSpec, CollisionChannel, CollisionConfig,
    ConvergenceOptions, Sweep,
};
use qkpz_core::identities::{
    check_burgers, check_cole_hopf, check_continuity, check_generator_equivalence,
    check_height_kpz, check_noise_rearrangement, check_number_identity, check_replica_all,
    continuum_noise_probe, DEFAULT_EQUIVALENCE_SEED, EQUIVALENCE_SAMPLES,
};
use qkpz_core::lindblad::{expectation, pointer_correspondence};
use qkpz_core::oracles::{bessel_vs_evolution, FULL_QUANTUM_MAX_SITES};
use qkpz_core::{chain::cole_hopf_params, Complex64, Density, IdentityReport};
use rayon::prelude::*;

use crate::config::{Experiment, RunConfig};
use crate::output::{num, opt, CheckRecord, Table};
use crate::HarnessError;

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<CheckRecord>,
    pub notes: Vec<String>,
}

type Res<T> = std::result::Result<T, HarnessError>;

pub fn run_experiment(c: &RunConfig) -> Res<Outcome> {
    match c.experiment {
        Experiment::Verify => verify(c),
        Experiment::Bessel => bessel(c),
        Experiment::CollisionConverge => collision_converge(c),
        Experiment::ClassicalCompare => classical_compare(c),
        Experiment::GrowthExponent => growth_exponent(c),
        Experiment::ContinuumProbe => continuum_probe(c),
        Experiment::Trajectory => trajectory(c),
    }
}

fn verify(c: &RunConfig) -> Res<Outcome> {
    let l = c.length();
    let tol = &c.tolerances;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "verify",
        &["alpha", "check", "first_site", "last_site", "residual", "threshold", "pass"],
    );
    for alpha in c.alphas() {
        let mut reports: Vec<(IdentityReport, f64)> = vec![
            (check_number_identity(l, alpha)?, tol.identity),
            (check_continuity(l, alpha)?, tol.identity),
            (check_height_kpz(l, alpha)?, tol.identity),
        ];
        if alpha > 0.0 {
            let delta = cole_hopf_params(alpha)?.delta;
            reports.push((check_cole_hopf(l, alpha, delta)?, tol.identity));
            reports.push((check_noise_rearrangement(l, alpha)?, tol.identity));
        } else {
            out.notes.push(format!(
                "alpha = 0: Cole-Hopf, noise rearrangement and replica checks need alpha > 0 and were skipped"
            ));
        }
        reports.push((check_burgers(l, alpha)?, tol.identity));
        if alpha > 0.0 {
            reports.push((check_replica_all(l, alpha)?, tol.identity));
        }
        reports.push((
            check_generator_equivalence(l, alpha, EQUIVALENCE_SAMPLES, DEFAULT_EQUIVALENCE_SEED)?,
            tol.equivalence,
        ));
        for (r, limit) in reports {
            let pass = r.residual < limit;
            table.push(vec![
                num(alpha),
                r.name.clone(),
                r.sites.0.to_string(),
                r.sites.1.to_string(),
                num(r.residual),
                num(limit),
                pass.to_string(),
            ]);
            out.checks
                .push(CheckRecord::below(format!("{} L={l} alpha={alpha}", r.name), r.residual, limit));
        }
    }
    out.tables.push(table);
    Ok(out)
}

fn bessel(c: &RunConfig) -> Res<Outcome> {
    let l = c.length();
    let t = c.horizon();
    let k = c.site.unwrap_or(l.div_ceil(2));
    let times = c.times.clone().unwrap_or_else(|| vec![t / 5.0, 3.0 * t / 5.0, t]);
    let full = c.full_quantum.unwrap_or(l <= FULL_QUANTUM_MAX_SITES);
    let init = OccupationConfig::alternating(l, true);
    let tol = &c.tolerances;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "bessel",
        &[
            "alpha",
            "t",
            "bessel",
            "truncation_bound",
            "classical",
            "quantum",
            "bessel_vs_classical",
            "quantum_vs_classical",
            "light_cone_margin",
            "admissible",
        ],
    );
    for alpha in c.alphas() {
        let cmp = bessel_vs_evolution(l, alpha, &init, k, &times, full)?;
        for r in &cmp.rows {
            table.push(vec![
                num(alpha),
                num(r.t),
                num(r.bessel),
                num(r.truncation_bound),
                num(r.classical),
                opt(r.quantum),
                num(r.bessel_vs_classical),
                opt(r.quantum_vs_classical),
                num(r.light_cone_margin),
                r.admissible.to_string(),
            ]);
            let tag = format!("L={l} alpha={alpha} k={k} t={}", r.t);
            if r.admissible {
                out.checks
                    .push(CheckRecord::below(format!("bessel_vs_classical {tag}"), r.bessel_vs_classical, tol.bessel));
            } else {
                out.notes.push(format!(
                    "bessel_vs_classical {tag} = {:e} flagged, light-cone margin {:.3}",
                    r.bessel_vs_classical, r.light_cone_margin
                ));
            }
            if let Some(d) = r.quantum_vs_classical {
                out.checks.push(CheckRecord::below(
                    format!("quantum_vs_classical {tag}"),
                    d,
                    tol.quantum_classical,
                ));
            }
        }
    }
    out.tables.push(table);
    Ok(out)
}

fn collision_converge(c: &RunConfig) -> Res<Outcome> {
    let l = c.length();
    let t = c.horizon();
    let dts = match c.dt.as_ref().map(|d| d.values()) {
        Some(v) if v.len() > 1 => v,
        Some(v) => vec![v[0], v[0] / 2.0, v[0] / 4.0],
        None => vec![0.1, 0.05, 0.025],
    };
    let tol = &c.tolerances;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "collision-converge",
        &["alpha", "dt", "steps", "error", "ratio", "truncation", "error_doubled_truncation", "relative_change"],
    );
    for alpha in c.alphas() {
        let d = c.truncation.unwrap_or(AncillaSpec::minimal_truncation(alpha)?.max(30));
        let opts = ConvergenceOptions {
            truncation: d,
            ..Default::default()
        };
        let base = convergence_study_with(l, alpha, t, &dts, &opts)?;
        let doubled = convergence_study_with(
            l,
            alpha,
            t,
            &dts,
            &ConvergenceOptions {
                truncation: 2 * d,
                ..opts
            },
        )?;
        for (a, b) in base.rows.iter().zip(&doubled.rows) {
            let change = (a.error - b.error).abs() / a.error;
            table.push(vec![
                num(alpha),
                num(a.dt),
                a.steps.to_string(),
                num(a.error),
                opt(a.ratio),
                d.to_string(),
                num(b.error),
                num(change),
            ]);
            let tag = format!("L={l} alpha={alpha} dt={}", a.dt);
            if let Some(r) = a.ratio {
                out.checks
                    .push(CheckRecord::within(format!("error_ratio {tag}"), r, tol.ratio_min, tol.ratio_max));
            }
            out.checks
                .push(CheckRecord::below(format!("truncation_change {tag}"), change, tol.truncation_change));
        }
        let monotone = base.rows.windows(2).all(|w| w[1].error < w[0].error);
        out.checks
            .push(CheckRecord::holds(format!("error_decreasing L={l} alpha={alpha}"), monotone));
    }
    out.tables.push(table);
    Ok(out)
}

fn classical_compare(c: &RunConfig) -> Res<Outcome> {
    let l = c.length();
    let t = c.horizon();
    let times = c.times.clone().unwrap_or_else(|| vec![t / 4.0, t / 2.0, t]);
    let seeds = c.seed_list();
    let tol = &c.tolerances;
    let init = OccupationConfig::alternating(l, true);
    let mut out = Outcome::default();
    let mut corr = Table::new(
        "classical-compare-correspondence",
        &["alpha", "max_off_diagonal", "max_population_difference", "restriction_matches"],
    );
    let mut marg = Table::new(
        "classical-compare-marginals",
        &["alpha", "site", "sampled", "exact", "sigma", "z", "samples"],
    );
    for alpha in c.alphas() {
        let r = pointer_correspondence(l, alpha, &init, &times)?;
        corr.push(vec![
            num(alpha),
            num(r.max_off_diagonal),
            num(r.max_population_difference),
            r.restriction_matches.to_string(),
        ]);
        let tag = format!("L={l} alpha={alpha}");
        out.checks
            .push(CheckRecord::below(format!("off_diagonal {tag}"), r.max_off_diagonal, tol.off_diagonal));
        out.checks.push(CheckRecord::below(
            format!("population_difference {tag}"),
            r.max_population_difference,
            tol.population,
        ));
        out.checks
            .push(CheckRecord::holds(format!("restriction_equals_generator {tag}"), r.restriction_matches));

        let state = ClassicalState::new(init.bits().to_vec(), Boundary::Closed)?;
        let cmp = marginals_vs_master(&state, HopRates::asep(alpha)?, t, &seeds)?;
        for row in &cmp.rows {
            marg.push(vec![
                num(alpha),
                row.site.to_string(),
                num(row.sampled),
                num(row.exact),
                num(row.sigma),
                num(row.z),
                cmp.samples.to_string(),
            ]);
        }
        out.checks
            .push(CheckRecord::below(format!("marginal_max_z {tag} N={}", cmp.samples), cmp.max_z(), tol.sigma));
    }
    out.tables.push(corr);
    out.tables.push(marg);
    Ok(out)
}

fn growth_exponent(c: &RunConfig) -> Res<Outcome> {
    let l = c.length();
    let t = c.horizon();
    let alpha = c.alphas()[0];
    let seeds = c.seed_list();
    let [w0, w1] = c.fit_window.unwrap_or([t / 10.0, t]);
    let options = SampleOptions {
        sample_times: log_spaced_times(t / 100.0, t, 21),
        record_states: false,
        tracked_bonds: (1..=l).step_by((l / 512).max(1)).collect(),
    };
    let tol = &c.tolerances;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "growth-exponent",
        &["process", "t", "mean_height", "var_height", "n_samples", "beta_fit", "beta_stderr"],
    );
    let processes = [
        ("asep", HopRates::asep(alpha)?, tol.beta_min, tol.beta_max),
        ("symmetric", HopRates::symmetric(1.0), tol.control_beta_min, tol.control_beta_max),
    ];
    for (name, rates, lo, hi) in processes {
        let ensemble = ClassicalEnsemble::run(l, rates, Boundary::Periodic, t, &seeds, &options, |rng| {
            ClassicalState::uniform_with_count(l, l / 2, Boundary::Periodic, rng)
        })?;
        let stats = height_growth_stats(&ensemble, (w0, w1))?;
        for i in 0..stats.times.len() {
            table.push(vec![
                name.to_string(),
                num(stats.times[i]),
                num(stats.mean_height[i]),
                num(stats.var_height[i]),
                stats.n_samples.to_string(),
                num(stats.beta),
                num(stats.beta_stderr),
            ]);
        }
        out.checks.push(CheckRecord::within(
            format!("beta {name} L={l} alpha={alpha} seeds={}", seeds.len()),
            stats.beta,
            lo,
            hi,
        ));
        out.notes.push(format!(
            "{name}: beta = {:.4} +- {:.4} from {} points in [{w0}, {w1}]",
            stats.beta, stats.beta_stderr, stats.fit_points
        ));
    }
    out.notes.push(
        "growth exponent measured on the classical process, the mean dynamics of the quantum model on pointer states"
            .into(),
    );
    out.tables.push(table);
    Ok(out)
}

fn continuum_probe(c: &RunConfig) -> Res<Outcome> {
    let l = c.length();
    let tol = &c.tolerances;
    let rows = continuum_noise_probe(l, &c.alphas())?;
    let mut out = Outcome::default();
    let mut table = Table::new("continuum-probe", &["alpha", "average", "expected", "ratio", "residual"]);
    for r in &rows {
        table.push(vec![num(r.alpha), num(r.average), num(r.expected), num(r.ratio), num(r.residual)]);
        out.checks
            .push(CheckRecord::below(format!("probe_average L={l} alpha={}", r.alpha), r.residual, tol.probe));
        let ratio_err = (r.ratio - (1.0 + 1.0 / (2.0 * r.alpha))).abs();
        out.checks
            .push(CheckRecord::below(format!("probe_ratio L={l} alpha={}", r.alpha), ratio_err, tol.probe));
    }
    if rows.len() > 1 {
        let ordered = rows
            .windows(2)
            .all(|w| w[1].alpha <= w[0].alpha || w[1].ratio < w[0].ratio);
        out.checks.push(CheckRecord::holds("probe_ratio_decreasing", ordered));
    }
    out.tables.push(table);
    Ok(out)
}

fn trajectory(c: &RunConfig) -> Res<Outcome> {
    let l = c.length();
    let t = c.horizon();
    let dt = c.dt.as_ref().expect("validated").values()[0];
    let seeds = c.seed_list();
    let tol = &c.tolerances;
    let mut out = Outcome::default();
    let chain = Chain::new(l)?;
    let init = OccupationConfig::alternating(l, true);
    let mut psi0 = vec![Complex64::new(0.0, 0.0); chain.dim()];
    psi0[init.index()] = Complex64::new(1.0, 0.0);
    let numbers = chain
        .sites()
        .map(|k| number_op::<f64>(&chain, k))
        .collect::<qkpz_core::Result<Vec<_>>>()?;

    let mut columns = vec!["alpha".to_string(), "seed".into(), "step".into(), "t".into(), "norm".into()];
    columns.extend(chain.sites().map(|k| format!("n{k}")));
    let mut table = Table::new("trajectory", &columns);
    let mut comparison = Table::new(
        "trajectory-average",
        &["alpha", "site", "trajectory_mean", "stderr", "channel", "z"],
    );
    for alpha in c.alphas() {
        let d = c.truncation.unwrap_or(AncillaSpec::minimal_truncation(alpha)?);
        let config = CollisionConfig::new(chain, dt, Sweep::EvenOdd, AncillaSpec::new(alpha, d)?)?;
        let trajs = seeds
            .par_iter()
            .map(|&s| sample_trajectory(&config, &psi0, t, s))
            .collect::<qkpz_core::Result<Vec<_>>>()?;
        let mut worst_norm: f64 = 0.0;
        let mut finals = vec![Vec::with_capacity(trajs.len()); l];
        for tr in &trajs {
            for (step, (time, psi)) in tr.times.iter().zip(&tr.states).enumerate() {
                let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                worst_norm = worst_norm.max((norm - 1.0).abs());
                let occ: Vec<f64> = numbers
                    .iter()
                    .map(|n| (0..psi.len()).map(|b| psi[b].norm_sqr() * n.get(b, b).re).sum())
                    .collect();
                let mut row = vec![num(alpha), tr.seed.to_string(), step.to_string(), num(*time), num(norm)];
                row.extend(occ.iter().map(|v| num(*v)));
                table.push(row);
                if step + 1 == tr.states.len() {
                    for (k, v) in occ.into_iter().enumerate() {
                        finals[k].push(v);
                    }
                }
            }
        }
        out.checks
            .push(CheckRecord::below(format!("trajectory_norm L={l} alpha={alpha}"), worst_norm, tol.norm));

        let steps = qkpz_core::collision::step_count(t, dt)?;
        let rho0 = Density::from_pure(&psi0)?;
        let channel = CollisionChannel::new(&config)?.iterate(&rho0, steps)?;
        if seeds.len() < 2 {
            out.notes.push("single trajectory: channel comparison skipped".into());
            continue;
        }
        let n = seeds.len() as f64;
        for (k, vals) in finals.iter().enumerate() {
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            let target = expectation(&channel, &numbers[k])?.re;
            let diff = (mean - target).abs();
            let z = if se > 0.0 { diff / se } else if diff < 1e-12 { 0.0 } else { f64::INFINITY };
            comparison.push(vec![num(alpha), (k + 1).to_string(), num(mean), num(se), num(target), num(z)]);
            out.checks.push(CheckRecord::below(
                format!("trajectory_mean_z L={l} alpha={alpha} site={}", k + 1),
                z,
                tol.sigma,
            ));
        }
    }
    out.tables.push(table);
    out.tables.push(comparison);
    Ok(out)
}
