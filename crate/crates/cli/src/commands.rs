use std::io::Write;

use crn_relay::analytic::{analyze_table, joint_pmf, mode_table_from_pmf, Analysis, Policy};
use crn_relay::lattice::format_rational;
use crn_relay::sim::{pool, run_replications};
use crn_relay::validate::{brute_force_mode_probs, mc_joint_ccdf_grid};
use crn_relay::{
    analyze, build_alpha_lattice, thresholds, Mode, Regime, Scheme, SimConfig, SimReport,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, System, Value};
use crate::csv::{sig6, CsvWriter};
use crate::CliError;

use Mode::{All, Except1, Except2, Except3, Only1, Only2, Only3};

/// Column suffixes for the eight modes, in `Mode::ALL` order.
const MODE_COLUMNS: [&str; 8] = ["1", "2", "3", "not1", "not2", "not3", "notN", "N"];

const SIGMA: f64 = 3.0;
const REL_TOL: f64 = 0.01;
const DRIFT_TOL: f64 = 1e-3;
const NEGATIVE_DRIFT: f64 = 0.1;
const IDENTITY_TOL: f64 = 1e-9;

pub struct Context {
    pub config: ExperimentConfig,
    pub hash: String,
    pub strict: bool,
}

impl Context {
    fn seed(&self) -> u64 {
        self.config.sim.seed
    }

    fn schemes(&self) -> &'static [Scheme] {
        self.config.scheme.schemes()
    }

    fn csv<W: Write>(&self, out: W, columns: &[&str]) -> Result<CsvWriter<W>, CliError> {
        Ok(CsvWriter::new(out, &self.hash, self.seed(), columns)?)
    }
}

fn triple(v: [f64; 3]) -> String {
    format!("({}, {}, {})", sig6(v[0]), sig6(v[1]), sig6(v[2]))
}

fn rel_err(hat: f64, want: f64) -> f64 {
    if want == 0.0 {
        hat.abs()
    } else {
        (hat - want).abs() / want
    }
}

fn binomial_z(freq: f64, p: f64, n: f64) -> f64 {
    let se = (p * (1.0 - p) / n).sqrt().max(1.0 / n);
    (freq - p).abs() / se
}

pub fn stats<W: Write>(ctx: &Context, mut out: W) -> Result<(), CliError> {
    let System { stats: s, rates } = ctx.config.system()?;
    let regime = match s.regime() {
        Regime::PeakInterference => "peak-interference-only (PIP)",
        Regime::PeakTransmit => "peak-transmit (PTP)",
        Regime::Silent => "silent",
    };
    let set = |i: usize| rates.rates(i).iter().map(format_rational).collect::<Vec<_>>().join(", ");
    let lattice = build_alpha_lattice(&rates);
    let lambda: Vec<String> = lattice.values().iter().map(format_rational).collect();
    writeln!(out, "config_hash  {}", ctx.hash)?;
    writeln!(out, "regime       {regime}")?;
    writeln!(out, "pip          {}", s.is_pip())?;
    writeln!(out, "gamma_max    {}", sig6(s.gamma_max))?;
    writeln!(out, "gamma_p      {}", sig6(s.gamma_p))?;
    writeln!(out, "omega_h      {}", triple(s.omega_h))?;
    writeln!(out, "omega_g      {}", triple(s.omega_g))?;
    writeln!(out, "lambda       {}", triple(s.lambda))?;
    writeln!(out, "mu           {}", triple(s.mu))?;
    writeln!(out, "p            {}", triple(s.p))?;
    writeln!(out, "rates_link1  {{{}}}", set(0))?;
    writeln!(out, "rates_link2  {{{}}}", set(1))?;
    writeln!(out, "alpha_set    {{{}}}", lambda.join(", "))?;
    writeln!(out, "w_max        {}", lattice.w_max())?;
    Ok(())
}

pub fn modes<W: Write>(ctx: &Context, out: W) -> Result<(), CliError> {
    let System { stats, rates } = ctx.config.system()?;
    let mut columns = vec!["scheme", "w", "alpha"];
    let names: Vec<String> = MODE_COLUMNS.iter().map(|m| format!("p_{m}")).collect();
    columns.extend(names.iter().map(String::as_str));
    columns.push("half_tau_t");
    let analyses: Vec<Analysis> = ctx
        .schemes()
        .iter()
        .map(|&scheme| analyze(&stats, &rates, scheme))
        .collect::<Result<_, _>>()?;
    let mut csv = ctx.csv(out, &columns)?;
    for (a, scheme) in analyses.iter().zip(ctx.schemes()) {
        for w in 0..=a.table.w_max() {
            let mut row = vec![scheme.to_string(), w.to_string(), format_rational(a.table.lattice.get(w))];
            row.extend(Mode::ALL.iter().map(|&m| sig6(a.table.mode_prob(w, m))));
            row.push(sig6(a.curve.values[w] / 2.0));
            csv.row(&row)?;
        }
    }
    csv.finish()?;
    Ok(())
}

pub fn throughput_sweep<W: Write>(ctx: &Context, out: W) -> Result<(), CliError> {
    let (parameter, values) = match &ctx.config.sweep {
        Some(s) => (s.parameter.clone(), s.values.clone()),
        None => ("none".to_string(), vec![Value::Str(String::new())]),
    };
    let points: Vec<(usize, Scheme)> = (0..values.len())
        .flat_map(|i| ctx.schemes().iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<Analysis> = points
        .par_iter()
        .map(|&(i, scheme)| {
            let cfg = if parameter == "none" {
                ctx.config.clone()
            } else {
                ctx.config.with_parameter(&parameter, &values[i])?
            };
            let System { stats, rates } = cfg.system()?;
            Ok(analyze(&stats, &rates, scheme)?)
        })
        .collect::<Result<_, CliError>>()?;
    let columns = [
        "parameter", "value", "scheme", "case", "w_star", "alpha_star", "policy_alpha", "tau1", "tau2",
        "tau3", "tau_t",
    ];
    let mut csv = ctx.csv(out, &columns)?;
    for (&(i, scheme), a) in points.iter().zip(&results) {
        let op = &a.operating_point;
        csv.row(&[
            parameter.clone(),
            values[i].to_string(),
            scheme.to_string(),
            op.case.label().to_string(),
            op.w_star.to_string(),
            format_rational(&op.alpha_star),
            format_rational(&op.policy_alpha),
            sig6(op.tau1),
            sig6(op.tau2),
            sig6(op.tau3),
            sig6(op.tau_t),
        ])?;
    }
    csv.finish()?;
    Ok(())
}

struct SimRow {
    label: String,
    report: SimReport,
}

pub fn simulate<W: Write>(ctx: &Context, out: W, negative_control: bool) -> Result<(), CliError> {
    let System { stats, rates } = ctx.config.system()?;
    let sim = &ctx.config.sim;
    let cfg = SimConfig {
        slots: sim.slots,
        seed: sim.seed,
        warmup: sim.warmup,
        replication: 0,
    };
    let columns = [
        "scheme", "replication", "slots", "warmup", "case", "policy_alpha", "stable", "tau1_hat", "tau1",
        "tau1_relerr", "tau2_hat", "tau2", "tau2_relerr", "tau3_hat", "tau3", "tau3_relerr", "tau_t_hat",
        "tau_t", "tau_t_relerr", "imbalance", "occupancy_drift", "mean_occupancy", "final_occupancy",
        "shortfall_slots", "max_mode_sigma",
    ];
    let mut csv = ctx.csv(out, &columns)?;
    let mut failures = Vec::new();
    for &scheme in ctx.schemes() {
        let a = analyze(&stats, &rates, scheme)?;
        let op = &a.operating_point;
        let (policy, w) = if negative_control {
            let w_max = a.table.w_max();
            let policy = Policy {
                alpha: a.table.lattice.get(w_max).clone(),
                coins: op.coins,
            };
            (policy, w_max)
        } else {
            (op.policy(), op.policy_w)
        };
        let reps = run_replications(&cfg, sim.replications, &stats, &rates, &policy, scheme)?;
        let mut rows: Vec<SimRow> = reps
            .iter()
            .map(|r| SimRow {
                label: r.replication.to_string(),
                report: r.clone(),
            })
            .collect();
        let pooled = pool(&reps).expect("at least one replication");
        if reps.len() > 1 {
            rows.push(SimRow {
                label: "pooled".into(),
                report: pooled.clone(),
            });
        }
        let mode_sigma = |r: &SimReport| {
            Mode::ALL
                .iter()
                .map(|&m| binomial_z(r.mode_freq[m], a.table.mode_prob(w, m), r.slots as f64))
                .fold(0.0, f64::max)
        };
        for row in &rows {
            let r = &row.report;
            csv.row(&[
                scheme.to_string(),
                row.label.clone(),
                r.slots.to_string(),
                r.warmup.to_string(),
                op.case.label().to_string(),
                format_rational(&policy.alpha),
                (!negative_control).to_string(),
                sig6(r.tau1_hat),
                sig6(op.tau1),
                sig6(rel_err(r.tau1_hat, op.tau1)),
                sig6(r.tau2_hat),
                sig6(op.tau2),
                sig6(rel_err(r.tau2_hat, op.tau2)),
                sig6(r.tau3_hat),
                sig6(op.tau3),
                sig6(rel_err(r.tau3_hat, op.tau3)),
                sig6(r.tau_t_hat),
                sig6(op.tau_t),
                sig6(rel_err(r.tau_t_hat, op.tau_t)),
                sig6(rel_err(r.tau1_hat, r.tau2_hat)),
                sig6(r.occupancy_drift),
                sig6(r.mean_occupancy),
                sig6(r.final_occupancy),
                r.shortfall_slots.to_string(),
                sig6(mode_sigma(r)),
            ])?;
        }

        let mut bad = Vec::new();
        if negative_control {
            if pooled.occupancy_drift <= NEGATIVE_DRIFT {
                bad.push(format!("drift {:.3e} not above {NEGATIVE_DRIFT}", pooled.occupancy_drift));
            }
        } else {
            for (name, hat, want) in [
                ("tau1", pooled.tau1_hat, op.tau1),
                ("tau2", pooled.tau2_hat, op.tau2),
                ("tau3", pooled.tau3_hat, op.tau3),
                ("tau_t", pooled.tau_t_hat, op.tau_t),
            ] {
                if rel_err(hat, want) > REL_TOL {
                    bad.push(format!("{name} off by {:.2}%", 100.0 * rel_err(hat, want)));
                }
            }
            if rel_err(pooled.tau1_hat, pooled.tau2_hat) > REL_TOL {
                bad.push("tau1/tau2 imbalance above 1%".into());
            }
            if pooled.occupancy_drift.abs() > DRIFT_TOL {
                bad.push(format!("drift {:.3e} above {DRIFT_TOL}", pooled.occupancy_drift));
            }
            if mode_sigma(&pooled) > SIGMA {
                bad.push(format!("mode frequency {:.1} sigma off", mode_sigma(&pooled)));
            }
        }
        eprintln!(
            "scheme {scheme}: {}, alpha {}, tau_t sim {} vs {}, drift {:.3e}{}",
            op.case,
            format_rational(&policy.alpha),
            sig6(pooled.tau_t_hat),
            sig6(op.tau_t),
            pooled.occupancy_drift,
            if bad.is_empty() { String::new() } else { format!(" [{}]", bad.join("; ")) }
        );
        failures.extend(bad.into_iter().map(|b| format!("scheme {scheme}: {b}")));
    }
    csv.finish()?;
    strict_outcome(ctx, failures)
}

fn strict_outcome(ctx: &Context, failures: Vec<String>) -> Result<(), CliError> {
    if ctx.strict && !failures.is_empty() {
        return Err(CliError::Strict(failures.join("; ")));
    }
    Ok(())
}

struct Check {
    name: &'static str,
    scheme: Scheme,
    value: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn at_most(name: &'static str, scheme: Scheme, value: f64, tolerance: f64) -> Self {
        Check {
            name,
            scheme,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// Largest deviation in the boundary identities between neighbouring weights.
fn continuity_gap(a: &Analysis) -> f64 {
    let t = &a.table;
    let mut gap = 0.0f64;
    for w in 1..t.w_max() {
        let d = [
            t.rate(w, 0, &[Only1, Except2, Except3, All]) - t.rate(w + 1, 0, &[Only1]),
            t.rate(w, 1, &[Only2, Except1, Except3, All]) - t.rate(w - 1, 1, &[Only2]),
            t.rate(w, 2, &[Only3, Except2]) - t.rate(w - 1, 2, &[Only3, Except1]),
        ];
        gap = d.iter().fold(gap, |g, x| g.max(x.abs()));
    }
    gap
}

pub fn validate<W: Write>(ctx: &Context, out: W) -> Result<(), CliError> {
    let System { stats, rates } = ctx.config.system()?;
    let draws = ctx.config.sim.slots;
    let seed = ctx.seed();
    let lattice = build_alpha_lattice(&rates);
    let mut checks = Vec::new();
    for &scheme in ctx.schemes() {
        let pmf = joint_pmf(&stats, &rates, scheme)?;
        checks.push(Check::at_most("pmf_normalization", scheme, (pmf.total() - 1.0).abs(), IDENTITY_TOL));
        let a = analyze_table(mode_table_from_pmf(&pmf, &rates, &lattice))?;
        let partition = (0..=a.table.w_max())
            .map(|w| (Mode::ALL.iter().map(|&m| a.table.mode_prob(w, m)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(Check::at_most("mode_partition", scheme, partition, IDENTITY_TOL));
        checks.push(Check::at_most("rate_continuity", scheme, continuity_gap(&a), IDENTITY_TOL));
        let expected = a.expected_argmin();
        let argmin_gap = (a.curve.values[expected] - a.curve.tau_t).abs();
        checks.push(Check::at_most("argmin_vs_stability", scheme, argmin_gap, IDENTITY_TOL));
        let op = &a.operating_point;
        checks.push(Check::at_most("balance", scheme, (op.tau1 - op.tau2).abs(), IDENTITY_TOL));

        let est = brute_force_mode_probs(&stats, &rates, &op.policy_alpha, scheme, draws, seed)?;
        let z = Mode::ALL
            .iter()
            .map(|&m| {
                let p = a.table.mode_prob(op.policy_w, m);
                binomial_z(est[m].estimate, p, draws as f64)
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most("mode_probs_vs_sampling_sigma", scheme, z, SIGMA));

        if scheme == Scheme::Alamouti {
            let th = thresholds(&rates);
            let finite = |v: &[f64]| v.iter().copied().filter(|x| x.is_finite()).take(4).collect::<Vec<_>>();
            let (g1, g2, g3) = (finite(&th.g1), finite(&th.g2), finite(&th.g3));
            let mut points = Vec::new();
            for &a in &g1 {
                for &b in &g2 {
                    for &c in &g3 {
                        points.push([a, b, c]);
                    }
                }
            }
            let est = mc_joint_ccdf_grid(&stats, &points, scheme, draws, seed.wrapping_add(1))?;
            let mut z = 0.0f64;
            for (y, e) in points.iter().zip(&est) {
                let q = stats.joint_ccdf_scheme2(y[0], y[1], y[2])?;
                z = z.max(binomial_z(e.estimate, q, draws as f64));
            }
            checks.push(Check::at_most("ccdf_vs_sampling_sigma", scheme, z, SIGMA));
        }
    }
    let mut csv = ctx.csv(out, &["check", "scheme", "value", "tolerance", "passed"])?;
    for c in &checks {
        csv.row(&[
            c.name.to_string(),
            c.scheme.to_string(),
            sig6(c.value),
            sig6(c.tolerance),
            c.passed.to_string(),
        ])?;
    }
    csv.finish()?;
    let failures: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} (scheme {}): {} > {}", c.name, c.scheme, sig6(c.value), sig6(c.tolerance)))
        .collect();
    eprintln!("validate: {} checks, {} failed", checks.len(), failures.len());
    for f in &failures {
        eprintln!("  {f}");
    }
    strict_outcome(ctx, failures)
}
