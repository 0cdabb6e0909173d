//! One test per acceptance criterion. Each writes a `criterion N: PASS|FAIL`
//! line straight to stderr so it shows up without `--nocapture`.

use std::io::Write;

use gibbs_core::approx::{
    decay_exponents, periodic_harness, periodic_identity_check, stability_check, truncation_harness, CountableModel,
    CountableObservable, FiniteSubsystem, PeriodicMeasure,
};
use gibbs_core::bounds::{
    cohomology_residual, finitary_check, finitary_markov_check, pressure_gap_check, RADICAND_TOL,
};
use gibbs_core::experiment::{builtin_suite, parse_config, run_experiment, RunOptions};
use gibbs_core::measures::{conditional_kl_integral, pinsker_gap, MarkovMeasure};
use gibbs_core::potential::{builtin_potential, LocallyConstantFunction, DEFAULT_THETA};
use gibbs_core::random::{derive_seed, random_function, random_markov_measure, random_probability_vector, rng_from_seed};
use gibbs_core::shift::TransitionMatrix;
use gibbs_core::transfer::{gurevich_estimate, partition_sum, Equilibrium};

fn report(n: u32, passed: bool, detail: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {n:>2}: {} {detail}", if passed { "PASS" } else { "FAIL" });
}

fn finish(n: u32, failures: Vec<String>, detail: String) {
    report(n, failures.is_empty(), &detail);
    assert!(failures.is_empty(), "criterion {n}: {}", failures.join("; "));
}

fn golden() -> TransitionMatrix {
    TransitionMatrix::golden_mean()
}

fn full2() -> TransitionMatrix {
    TransitionMatrix::full_shift(2)
}

#[test]
fn criterion_01_perron_closed_forms() {
    let mut failures = Vec::new();
    let pg = Equilibrium::new(&LocallyConstantFunction::zero(&golden())).unwrap().pressure();
    let expected_g = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    if (pg - expected_g).abs() > 1e-10 {
        failures.push(format!("golden {pg} vs {expected_g}"));
    }
    let p2 = Equilibrium::new(&LocallyConstantFunction::zero(&full2())).unwrap().pressure();
    if (p2 - 2f64.ln()).abs() > 1e-12 {
        failures.push(format!("full2 {p2}"));
    }
    finish(
        1,
        failures,
        format!("golden |dP| = {:.2e}, full2 |dP| = {:.2e}", (pg - expected_g).abs(), (p2 - 2f64.ln()).abs()),
    );
}

#[test]
fn criterion_02_gurevich_consistency() {
    let phi = LocallyConstantFunction::zero(&golden());
    let mut failures = Vec::new();
    let points = gurevich_estimate(&phi, 0, 12).unwrap();
    let at12 = points[11].residual.abs();
    if at12 > 0.06 {
        failures.push(format!("|residual| at 12 is {at12}"));
    }
    for w in points[3..].windows(2) {
        if w[1].residual.abs() > w[0].residual.abs() {
            failures.push(format!("residual not decreasing at n = {}", w[1].n));
        }
    }
    // Z_n(a) = (A^n)_{aa} = F_{n+1}
    let mut worst = 0.0f64;
    for n in 1..=12 {
        let z = partition_sum(&phi, 0, n).unwrap();
        worst = worst.max(z.relative_difference);
        let (mut x, mut y) = (1u64, 0u64); // (A^n)_{aa}, (A^n)_{ab}
        for _ in 0..n {
            (x, y) = (x + y, x);
        }
        if z.enumeration != x as f64 {
            failures.push(format!("Z_{n} enumeration {} vs Fibonacci {x}", z.enumeration));
        }
    }
    if worst > 1e-10 {
        failures.push(format!("enumeration vs matrix {worst}"));
    }
    finish(2, failures, format!("|residual(12)| = {at12:.4}, max enum/matrix diff = {worst:.2e}"));
}

#[test]
fn criterion_03_gibbs_window() {
    let mut failures = Vec::new();
    let weighted = builtin_potential("var-example", &full2()).unwrap();
    for (name, phi) in [("golden/zero", LocallyConstantFunction::zero(&golden())), ("full2/var-example", weighted)] {
        let eq = Equilibrium::new(&phi).unwrap();
        let cert = eq.perron().gibbs_property_certificate(8).unwrap();
        if !cert.within_window {
            failures.push(format!("{name}: ratios [{}, {}] outside C = {}", cert.min_ratio, cert.max_ratio, cert.window_c));
        }
    }
    let mut bern_dev = 0.0f64;
    for weights in [[0.5, 0.5], [0.3, 0.7], [0.9, 0.1]] {
        let logs: Vec<f64> = weights.iter().map(|w: &f64| w.ln()).collect();
        let phi = LocallyConstantFunction::from_state_values(&full2(), DEFAULT_THETA, &logs).unwrap();
        let eq = Equilibrium::new(&phi).unwrap();
        let cert = eq.perron().gibbs_property_certificate(8).unwrap();
        bern_dev = bern_dev.max((cert.max_ratio - 1.0).abs()).max((cert.min_ratio - 1.0).abs());
    }
    if bern_dev > 1e-12 {
        failures.push(format!("Bernoulli ratio deviation {bern_dev}"));
    }
    finish(3, failures, format!("windows hold; Bernoulli |ratio - 1| <= {bern_dev:.2e}"));
}

#[test]
fn criterion_04_cohomology() {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (name, phi) in builtin_suite(0).unwrap() {
        let r = cohomology_residual(&Equilibrium::new(&phi).unwrap()).unwrap();
        worst = worst.max(r);
        if !(r <= 1e-10) {
            failures.push(format!("{name}: {r}"));
        }
    }
    finish(4, failures, format!("max residual {worst:.2e}"));
}

fn kl_systems() -> Vec<(&'static str, LocallyConstantFunction)> {
    vec![
        ("full2/var-example", builtin_potential("var-example", &full2()).unwrap()),
        (
            "golden/random",
            random_function(&golden(), 2, DEFAULT_THETA, -1.0, 1.0, 11).unwrap(),
        ),
        (
            "loop3/random",
            random_function(&TransitionMatrix::loop3(), 2, DEFAULT_THETA, -1.0, 1.0, 12).unwrap(),
        ),
    ]
}

#[test]
fn criterion_05_kl_pressure_identity() {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (s, (name, phi)) in kl_systems().into_iter().enumerate() {
        let eq = Equilibrium::new(&phi).unwrap();
        for t in 0..100 {
            let mu = random_markov_measure(eq.base(), derive_seed(0, 20 + s as u64, t)).unwrap();
            let kl = conditional_kl_integral(eq.measure(), &mu).unwrap();
            let gap = eq.pressure() - mu.metric_pressure(eq.potential()).unwrap();
            let r = (kl.value - gap).abs();
            worst = worst.max(r);
            if !(r <= 1e-10) || kl.support_violation {
                failures.push(format!("{name} trial {t}: {r}"));
            }
        }
    }
    finish(5, failures, format!("300 measures, max residual {worst:.2e}"));
}

#[test]
fn criterion_06_pinsker() {
    let mut rng = rng_from_seed(6);
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    for t in 0..1000 {
        let dim = 2 + t % 7;
        let p = random_probability_vector(&mut rng, dim);
        let q = random_probability_vector(&mut rng, dim);
        let g = pinsker_gap(&p, &q).unwrap();
        min_margin = min_margin.min(g.bound - g.l1);
        if g.l1 > g.bound {
            violations.push(format!("pair {t}: {} > {}", g.l1, g.bound));
        }
    }
    finish(6, violations, format!("1000 pairs, min margin {min_margin:.3e}"));
}

#[test]
fn criterion_07_pressure_gap_bound() {
    let mut failures = Vec::new();
    let systems = builtin_suite(0).unwrap();
    let mut min_slack = f64::INFINITY;
    let mut count = 0;
    for t in 0..1000u64 {
        let (name, phi) = &systems[t as usize % systems.len()];
        let eq = Equilibrium::new(phi).unwrap();
        let range = 1 + (t as usize / systems.len()) % 3;
        let f = random_function(phi.base(), range, phi.theta(), -1.0, 1.0, derive_seed(0, 2, t)).unwrap();
        let mu = random_markov_measure(eq.base(), derive_seed(0, 1, t)).unwrap();
        let r = pressure_gap_check(&eq, &mu, &eq.lift(&f).unwrap()).unwrap();
        if r.vacuous {
            continue;
        }
        count += 1;
        min_slack = min_slack.min(r.slack);
        if !(r.slack >= 0.0) {
            failures.push(format!("{name} trial {t}: slack {}", r.slack));
        }
    }
    // point mass on a^inf, full 2-shift, phi = 0, f = 1_[a]
    let eq = Equilibrium::new(&LocallyConstantFunction::zero(&full2())).unwrap();
    let mu = MarkovMeasure::point_mass(eq.base(), 0).unwrap();
    let f = LocallyConstantFunction::indicator(&full2(), &[0]).unwrap();
    let r = pressure_gap_check(&eq, &mu, &f).unwrap();
    if (r.lhs - 0.5).abs() > 1e-12 {
        failures.push(format!("point mass lhs {}", r.lhs));
    }
    if (r.pressure_gap - 2f64.ln()).abs() > 1e-12 {
        failures.push(format!("point mass gap {}", r.pressure_gap));
    }
    let expected_rhs = r.constant * r.f_norm * 2f64.ln().sqrt();
    if (r.rhs - expected_rhs).abs() > 1e-12 || r.constant < 2f64.sqrt() || r.rhs <= 0.5 {
        failures.push(format!("point mass rhs {} (a = {})", r.rhs, r.constant));
    }
    finish(
        7,
        failures,
        format!("{count} triples, min slack {min_slack:.3e}; point mass lhs 1/2, rhs {:.4}", r.rhs),
    );
}

#[test]
fn criterion_08_finitary_bounds() {
    let systems = builtin_suite(0).unwrap();
    let mut slack_failures = 0usize;
    let mut markov_failures = 0usize;
    let mut radicand_failures = Vec::new();
    let mut min_radicand = f64::INFINITY;
    let mut min_radicand_with_present = f64::INFINITY;
    let mut reports = 0usize;
    for t in 0..100u64 {
        let (name, phi) = &systems[t as usize % systems.len()];
        let eq = Equilibrium::new(phi).unwrap();
        let f = random_function(phi.base(), 1 + t as usize % 2, phi.theta(), -1.0, 1.0, derive_seed(0, 2, t)).unwrap();
        let f = eq.lift(&f).unwrap();
        let mu = random_markov_measure(eq.base(), derive_seed(0, 1, t)).unwrap();
        let ell = phi.range();
        for n in 1..=20 {
            let r = finitary_check(&eq, &mu, &f, n).unwrap();
            reports += 1;
            if !r.vacuous && !r.slack_ok() {
                slack_failures += 1;
            }
            let raw = r.radicand_raw.unwrap();
            min_radicand = min_radicand.min(raw);
            if let Some(p) = r.radicand_with_present {
                min_radicand_with_present = min_radicand_with_present.min(p);
            }
            if raw < -RADICAND_TOL && radicand_failures.len() < 5 {
                radicand_failures.push(format!("{name} trial {t} n = {n}: radicand {raw:.4}"));
            }
        }
        for n in (3 * ell).max(1)..=20 {
            let r = finitary_markov_check(&eq, &mu, &f, n, ell).unwrap();
            reports += 1;
            if !r.vacuous && !r.slack_ok() {
                markov_failures += 1;
            }
            let raw = r.radicand_raw.unwrap();
            min_radicand = min_radicand.min(raw);
            if raw < -RADICAND_TOL && radicand_failures.len() < 5 {
                radicand_failures.push(format!("{name} trial {t} finite-range n = {n}: radicand {raw:.4}"));
            }
        }
    }
    let mut failures = Vec::new();
    if slack_failures > 0 {
        failures.push(format!("{slack_failures} general-form slack violations"));
    }
    if markov_failures > 0 {
        failures.push(format!("{markov_failures} finite-range slack violations"));
    }
    failures.extend(radicand_failures);
    finish(
        8,
        failures,
        format!(
            "{reports} reports; slack ok (general {slack_failures}, finite-range {markov_failures} violations); \
             min radicand {min_radicand:.4} (conditioning on xi_0^{{n-1}}: {min_radicand_with_present:.4})"
        ),
    );
}

#[test]
fn criterion_09_countable_truncations() {
    let model = CountableModel::geometric(0.5, 1.0).unwrap();
    let mut failures = Vec::new();
    let mut worst_gap = 0.0f64;
    for n in 2..=20 {
        let oracle = -(1.0 - 0.5f64.powi(n as i32)).ln();
        let closed = model.pressure_gap(n);
        // independent: Perron pressure of the truncated matrix
        let perron = model.pressure() - model.truncate(n).unwrap().pressure();
        let d = (closed - oracle).abs().max((perron - oracle).abs());
        worst_gap = worst_gap.max(d);
        if d > 1e-12 {
            failures.push(format!("n = {n}: closed {closed}, perron {perron}, oracle {oracle}"));
        }
    }
    let f = CountableObservable::indicator(1).unwrap();
    let rows = truncation_harness(&model, &f, 2..=20).unwrap();
    let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    if !(min_slack >= 0.0) {
        failures.push(format!("min slack {min_slack}"));
    }
    let (ls, rs) = decay_exponents(&rows);
    let l2 = 2f64.ln();
    if ((ls + l2) / l2).abs() > 0.1 {
        failures.push(format!("lhs exponent {ls}"));
    }
    if ((rs + l2 / 2.0) / (l2 / 2.0)).abs() > 0.1 {
        failures.push(format!("rhs exponent {rs}"));
    }
    finish(
        9,
        failures,
        format!("gap error {worst_gap:.2e}, min slack {min_slack:.3e}, exponents lhs {ls:.4} rhs {rs:.4}"),
    );
}

#[test]
fn criterion_10_periodic_orbits() {
    let mut failures = Vec::new();
    let tilted = LocallyConstantFunction::from_fn(&golden(), 2, DEFAULT_THETA, |w| if w == [0, 0] { 0.3 } else { 0.0 })
        .unwrap();
    let systems = [
        ("golden/zero", LocallyConstantFunction::zero(&golden())),
        ("golden/tilted", tilted),
        ("full2/zero", LocallyConstantFunction::zero(&full2())),
        ("full2/var-example", builtin_potential("var-example", &full2()).unwrap()),
    ];
    let (mut trace, mut ident, mut min_slack, mut pre) = (0.0f64, 0.0f64, f64::INFINITY, 0);
    for (name, phi) in &systems {
        let sub = FiniteSubsystem::new(phi).unwrap();
        for k in 1..=12 {
            let nu = PeriodicMeasure::new(&sub, k).unwrap();
            trace = trace.max(nu.trace_relative_difference);
            ident = ident.max(periodic_identity_check(&nu, &sub).residual);
        }
        let f = LocallyConstantFunction::indicator(phi.base(), &[0]).unwrap();
        for row in periodic_harness(&sub, &f, 3..=12).unwrap() {
            if row.pre_asymptotic {
                pre += 1;
                continue;
            }
            min_slack = min_slack.min(row.slack);
            if !(row.slack >= 0.0) {
                failures.push(format!("{name} k = {}: slack {}", row.k, row.slack));
            }
        }
    }
    if trace > 1e-10 {
        failures.push(format!("trace identity {trace}"));
    }
    if ident > 1e-10 {
        failures.push(format!("entropy identity {ident}"));
    }
    finish(
        10,
        failures,
        format!("trace {trace:.2e}, entropy identity {ident:.2e}, min slack {min_slack:.3e}, {pre} pre-asymptotic rows"),
    );
}

#[test]
fn criterion_11_stability() {
    let mut failures = Vec::new();
    let bases = [golden(), full2(), TransitionMatrix::loop3(), TransitionMatrix::full_shift(3)];
    let mut min_slack = f64::INFINITY;
    for t in 0..100u64 {
        let base = &bases[t as usize % bases.len()];
        let phi = random_function(base, 2, DEFAULT_THETA, -1.0, 1.0, derive_seed(0, 30, t)).unwrap();
        let delta = random_function(base, 2, DEFAULT_THETA, -0.5, 0.5, derive_seed(0, 31, t)).unwrap();
        let psi = phi.add(&delta).unwrap();
        assert!(phi.sup_distance(&psi).unwrap() <= 0.5);
        let f = random_function(base, 1 + t as usize % 2, DEFAULT_THETA, -1.0, 1.0, derive_seed(0, 32, t)).unwrap();
        let r = stability_check(&phi, &psi, &f).unwrap();
        min_slack = min_slack.min(r.slack);
        if !(r.slack >= 0.0) {
            failures.push(format!("pair {t}: slack {}", r.slack));
        }
    }
    let phi = LocallyConstantFunction::zero(&full2());
    let psi = LocallyConstantFunction::from_state_values(&full2(), DEFAULT_THETA, &[0.1, -0.1]).unwrap();
    let f = LocallyConstantFunction::indicator(&full2(), &[0]).unwrap();
    let r = stability_check(&phi, &psi, &f).unwrap();
    // mu_psi[a] = e^0.1 / (e^0.1 + e^-0.1)
    let oracle_lhs = 0.1f64.exp() / (0.1f64.exp() + (-0.1f64).exp()) - 0.5;
    let oracle_dist = 0.1 + (0.1f64.cosh()).ln();
    if (r.lhs - 0.04983).abs() > 1e-4 || (r.lhs - oracle_lhs).abs() > 1e-12 {
        failures.push(format!("example lhs {}", r.lhs));
    }
    if (r.sup_distance - oracle_dist).abs() > 1e-12 {
        failures.push(format!("example distance {} vs {oracle_dist}", r.sup_distance));
    }
    if r.rhs < 0.458 {
        failures.push(format!("example rhs {}", r.rhs));
    }
    finish(
        11,
        failures,
        format!("min slack {min_slack:.3e}; example lhs {:.5}, rhs {:.4}", r.lhs, r.rhs),
    );
}

#[test]
fn criterion_12_identity_suite_determinism() {
    let config = parse_config("[experiment]\nkind = identities\nseed = 0\n").unwrap();
    let options = RunOptions {
        dry_run: true,
        ..Default::default()
    };
    let a = run_experiment(&config, &options).unwrap();
    let b = run_experiment(&config, &options).unwrap();
    let mut failures = Vec::new();
    if a.csv != b.csv {
        failures.push("CSV differs between runs".to_string());
    }
    if !a.passed() {
        failures.extend(a.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)));
    }
    finish(12, failures, format!("{} rows, byte-identical, exit {}", a.rows, a.exit_code()));
}
