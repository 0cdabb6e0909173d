//! Certified comparisons between the Gibbs measure and an arbitrary Markov
//! measure: the square-root pressure-gap bound, its finitary entropy forms,
//! and the identities they rest on.
//!
//! All inputs live on the working shift of an [`Equilibrium`]; lift
//! observables first with [`Equilibrium::lift`].

use crate::error::{Error, Result};
use crate::measures::{conditional_kl_integral, MarkovMeasure};
use crate::potential::LocallyConstantFunction;
use crate::transfer::Equilibrium;

/// Negative pressure gaps and radicands down to `-RADICAND_TOL` are roundoff.
pub const RADICAND_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `a ||f||_L (P - P_mu)^(1/2)`.
    PressureGap,
    /// `b ||f||_L (theta^n + (C_n theta^n + P - mu(phi) - H(xi | xi_1^{n-1}))^(1/2))`.
    Finitary,
    /// Finite-range form with block entropies, `n >= 3 ell`.
    FinitaryMarkov,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::PressureGap => "pressure-gap",
            BoundKind::Finitary => "finitary",
            BoundKind::FinitaryMarkov => "finitary-markov",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub n: Option<usize>,
    pub ell: Option<usize>,
    /// `|m(f) - mu(f)|`.
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `a` or `b`, for the range of `f`.
    pub constant: f64,
    pub c: f64,
    pub kappa: f64,
    pub eigen_product: f64,
    pub f_norm: f64,
    /// `P - P_mu(phi)` before clipping.
    pub pressure_gap: f64,
    pub gap_clipped: bool,
    /// `sum_j pi^mu_j D(q_mu(.|j) || q_m(.|j))`.
    pub kl_integral: Option<f64>,
    /// `theta^n` or `theta^floor((n - ell) / 2)`.
    pub decay_term: Option<f64>,
    /// `C_n theta^n`.
    pub tail_term: Option<f64>,
    /// `H(xi | xi_1^{n-1})`, the value used.
    pub conditional_entropy: Option<f64>,
    /// Conditioning on a family that contains `xi` itself; always 0.
    pub conditional_entropy_with_present: Option<f64>,
    /// `(1/n) H(xi_0^{n-1})`.
    pub block_entropy_rate: Option<f64>,
    /// `ell / (n - ell) H(xi)`.
    pub marginal_term: Option<f64>,
    pub radicand_raw: Option<f64>,
    /// Radicand under the alternative conditioning (the `xi_0` reading).
    pub radicand_with_present: Option<f64>,
    pub radicand_clipped: bool,
    /// Raw radicand below `-RADICAND_TOL`; `rhs` then uses 0 under the root.
    pub radicand_violation: bool,
    pub vacuous: bool,
}

impl BoundReport {
    fn new(kind: BoundKind) -> Self {
        BoundReport {
            kind,
            n: None,
            ell: None,
            lhs: 0.0,
            rhs: 0.0,
            slack: 0.0,
            constant: 0.0,
            c: 0.0,
            kappa: 0.0,
            eigen_product: 0.0,
            f_norm: 0.0,
            pressure_gap: 0.0,
            gap_clipped: false,
            kl_integral: None,
            decay_term: None,
            tail_term: None,
            conditional_entropy: None,
            conditional_entropy_with_present: None,
            block_entropy_rate: None,
            marginal_term: None,
            radicand_raw: None,
            radicand_with_present: None,
            radicand_clipped: false,
            radicand_violation: false,
            vacuous: false,
        }
    }

    fn finish(mut self) -> Self {
        self.slack = self.rhs - self.lhs;
        self.vacuous = !self.rhs.is_finite();
        self
    }

    /// Non-vacuous slack is nonnegative.
    pub fn slack_ok(&self) -> bool {
        self.vacuous || self.slack >= 0.0
    }

    /// Slack and radicand both certified.
    pub fn passed(&self) -> bool {
        self.slack_ok() && !self.radicand_violation
    }
}

fn check_inputs(eq: &Equilibrium, mu: &MarkovMeasure, f: &LocallyConstantFunction) -> Result<()> {
    if mu.base() != eq.base() || f.base() != eq.base() {
        return Err(Error::MismatchedShift);
    }
    if f.theta() != eq.theta() {
        return Err(Error::ThetaMismatch(f.theta(), eq.theta()));
    }
    Ok(())
}

struct Common {
    lhs: f64,
    gap: f64,
    gap_raw: f64,
    gap_clipped: bool,
    mu_phi: f64,
}

fn common(eq: &Equilibrium, mu: &MarkovMeasure, f: &LocallyConstantFunction) -> Result<Common> {
    check_inputs(eq, mu, f)?;
    let lhs = (eq.measure().integrate(f)? - mu.integrate(f)?).abs();
    let mu_phi = mu.integrate(eq.potential())?;
    let gap_raw = eq.pressure() - (mu.entropy_rate() + mu_phi);
    let (gap, gap_clipped) = clip(gap_raw).ok_or(Error::NegativeGap(gap_raw))?;
    Ok(Common {
        lhs,
        gap,
        gap_raw,
        gap_clipped,
        mu_phi,
    })
}

fn clip(x: f64) -> Option<(f64, bool)> {
    if x >= 0.0 {
        Some((x, false))
    } else if x >= -RADICAND_TOL {
        Some((0.0, true))
    } else {
        None
    }
}

fn fill_constants(r: &mut BoundReport, eq: &Equilibrium, f: &LocallyConstantFunction, use_b: bool) {
    let pd = eq.perron();
    let k = pd.constants_for_range(f.range());
    r.constant = if use_b { k.b } else { k.a };
    r.c = k.c;
    r.kappa = pd.kappa;
    r.eigen_product = pd.eigen_product;
    r.f_norm = f.l_norm();
}

fn apply_radicand(r: &mut BoundReport, raw: f64) -> f64 {
    r.radicand_raw = Some(raw);
    match clip(raw) {
        Some((v, clipped)) => {
            r.radicand_clipped = clipped;
            v
        }
        None => {
            r.radicand_violation = true;
            0.0
        }
    }
}

/// `|m(f) - mu(f)| <= a ||f||_L (P - P_mu(phi))^(1/2)`.
pub fn pressure_gap_check(eq: &Equilibrium, mu: &MarkovMeasure, f: &LocallyConstantFunction) -> Result<BoundReport> {
    let cm = common(eq, mu, f)?;
    let mut r = BoundReport::new(BoundKind::PressureGap);
    fill_constants(&mut r, eq, f, false);
    r.lhs = cm.lhs;
    r.pressure_gap = cm.gap_raw;
    r.gap_clipped = cm.gap_clipped;
    r.kl_integral = Some(conditional_kl_integral(eq.measure(), mu)?.value);
    r.rhs = r.constant * r.f_norm * cm.gap.sqrt();
    Ok(r.finish())
}

/// The finitary bound for any `n >= 1`, with the tail term `C_n theta^n`.
pub fn finitary_check(eq: &Equilibrium, mu: &MarkovMeasure, f: &LocallyConstantFunction, n: usize) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let cm = common(eq, mu, f)?;
    let phi = eq.potential();
    let theta_n = eq.theta().powi(n as i32);
    let tail = phi.tail_constant(n) * theta_n;
    let cond = mu.conditional_entropy(n);

    let mut r = BoundReport::new(BoundKind::Finitary);
    fill_constants(&mut r, eq, f, true);
    r.n = Some(n);
    r.lhs = cm.lhs;
    r.pressure_gap = cm.gap_raw;
    r.gap_clipped = cm.gap_clipped;
    r.decay_term = Some(theta_n);
    r.tail_term = Some(tail);
    r.conditional_entropy = Some(cond);
    r.conditional_entropy_with_present = Some(0.0);
    r.radicand_with_present = Some(tail + eq.pressure() - cm.mu_phi);
    let radicand = apply_radicand(&mut r, tail + eq.pressure() - (cm.mu_phi + cond));
    r.rhs = r.constant * r.f_norm * (theta_n + radicand.sqrt());
    Ok(r.finish())
}

/// The finite-range form: requires `var_ell(phi) = 0` and `n >= 3 ell`.
pub fn finitary_markov_check(
    eq: &Equilibrium,
    mu: &MarkovMeasure,
    f: &LocallyConstantFunction,
    n: usize,
    ell: usize,
) -> Result<BoundReport> {
    let phi = eq.potential();
    if ell == 0 || phi.variation(ell) != 0.0 {
        return Err(Error::Precondition(format!(
            "potential must be constant on cylinders of length ell = {ell}"
        )));
    }
    if n < 3 * ell {
        return Err(Error::Precondition(format!("need n >= 3 ell, got n = {n}, ell = {ell}")));
    }
    let cm = common(eq, mu, f)?;
    let decay = eq.theta().powi(((n - ell) / 2) as i32);
    let block_rate = mu.block_entropy_closed_form(n) / n as f64;
    let marginal = ell as f64 / (n - ell) as f64 * mu.marginal_entropy();

    let mut r = BoundReport::new(BoundKind::FinitaryMarkov);
    fill_constants(&mut r, eq, f, true);
    r.n = Some(n);
    r.ell = Some(ell);
    r.lhs = cm.lhs;
    r.pressure_gap = cm.gap_raw;
    r.gap_clipped = cm.gap_clipped;
    r.decay_term = Some(decay);
    r.block_entropy_rate = Some(block_rate);
    r.marginal_term = Some(marginal);
    let radicand = apply_radicand(&mut r, eq.pressure() - (cm.mu_phi + block_rate) + marginal);
    r.rhs = r.constant * r.f_norm * (decay + radicand.sqrt());
    Ok(r.finish())
}

/// `max |I_m(i, j) + phi(i, j) + log h_i - log h_j - P|` over transitions.
pub fn cohomology_residual(eq: &Equilibrium) -> Result<f64> {
    let pd = eq.perron();
    let info = eq.measure().information_function(eq.theta())?;
    let phi = eq.potential();
    let mut worst: f64 = 0.0;
    for (i, j) in eq.base().edges() {
        let w = [i, j];
        let r = info.function.value(&w) + phi.value(&w) + pd.h[i].ln() - pd.h[j].ln() - pd.pressure;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Entropy averaging over `k = ell..m-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyAveraging {
    /// `P - (mu(phi) + H(xi | xi_1^{floor((m - ell) / 2)}))`.
    pub lhs: f64,
    /// `2 (P - (mu(phi) + average))`.
    pub rhs: f64,
    pub slack: f64,
    /// `(1/(m - ell)) sum_k H(xi | xi_1^k)`.
    pub average: f64,
    /// `(H(xi_0^{m-1}) - H(xi_0^{ell-1})) / (m - ell)`.
    pub block_difference: f64,
    pub identity_residual: f64,
}

pub fn entropy_averaging_check(eq: &Equilibrium, mu: &MarkovMeasure, ell: usize, m: usize) -> Result<EntropyAveraging> {
    if !(m > ell && ell >= 1) {
        return Err(Error::Precondition(format!("need m > ell >= 1, got m = {m}, ell = {ell}")));
    }
    if mu.base() != eq.base() {
        return Err(Error::MismatchedShift);
    }
    let p = eq.pressure();
    let mu_phi = mu.integrate(eq.potential())?;
    let span = (m - ell) as f64;
    // H(xi | xi_1^k) is conditional_entropy(k + 1)
    let average = (ell..m).map(|k| mu.conditional_entropy(k + 1)).sum::<f64>() / span;
    let block_difference = (block_entropy(mu, m)? - block_entropy(mu, ell)?) / span;
    let lhs = p - (mu_phi + mu.conditional_entropy((m - ell) / 2 + 1));
    let rhs = 2.0 * (p - (mu_phi + average));
    Ok(EntropyAveraging {
        lhs,
        rhs,
        slack: rhs - lhs,
        average,
        block_difference,
        identity_residual: (average - block_difference).abs(),
    })
}

// enumeration where affordable, closed form beyond
fn block_entropy(mu: &MarkovMeasure, n: usize) -> Result<f64> {
    if mu.base().count_words(n) <= 1 << 16 {
        mu.block_entropy(n)
    } else {
        Ok(mu.block_entropy_closed_form(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::builtin_potential;
    use crate::random::{random_function, random_markov_measure};
    use crate::shift::TransitionMatrix;
    use crate::transfer::bernoulli_potential;
    use std::f64::consts::{LN_2, SQRT_2};

    fn full2_zero() -> Equilibrium {
        Equilibrium::new(&LocallyConstantFunction::zero(&TransitionMatrix::full_shift(2))).unwrap()
    }

    #[test]
    fn pressure_gap_trivial_and_point_mass() {
        let eq = full2_zero();
        let base = eq.base().clone();
        let f = LocallyConstantFunction::indicator(&base, &[0]).unwrap();
        let same = pressure_gap_check(&eq, eq.measure(), &f).unwrap();
        assert!(same.lhs.abs() < 1e-15 && same.rhs.abs() < 1e-7);

        let delta = MarkovMeasure::point_mass(&base, 0).unwrap();
        let r = pressure_gap_check(&eq, &delta, &f).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-15);
        assert!((r.constant - SQRT_2).abs() < 1e-12);
        assert!((r.rhs - SQRT_2 * LN_2.sqrt()).abs() < 1e-12);
        assert!(r.rhs > 0.5 && r.passed());
        assert!((r.kl_integral.unwrap() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn pressure_gap_random_golden() {
        let g = TransitionMatrix::golden_mean();
        let eq = Equilibrium::new(&LocallyConstantFunction::zero(&g)).unwrap();
        for t in 0..100 {
            let mu = random_markov_measure(&g, 1000 + t).unwrap();
            let f = random_function(&g, 1 + (t as usize % 3), 0.5, -1.0, 1.0, 2000 + t).unwrap();
            let r = pressure_gap_check(&eq, &mu, &f).unwrap();
            assert!(r.passed(), "trial {t}: {r:?}");
            assert!((r.kl_integral.unwrap() - r.pressure_gap).abs() < 1e-10);
        }
    }

    #[test]
    fn mismatched_inputs() {
        let eq = full2_zero();
        let g = TransitionMatrix::golden_mean();
        let mu = MarkovMeasure::bernoulli(eq.base(), &[0.5, 0.5]).unwrap();
        let f = LocallyConstantFunction::zero(&g);
        assert!(matches!(pressure_gap_check(&eq, &mu, &f), Err(Error::MismatchedShift)));
        let f = LocallyConstantFunction::zero(eq.base()).with_theta(0.25).unwrap();
        assert!(matches!(pressure_gap_check(&eq, &mu, &f), Err(Error::ThetaMismatch(..))));
    }

    #[test]
    fn finitary_range_two() {
        let full = TransitionMatrix::full_shift(2);
        let phi = random_function(&full, 2, 0.5, -1.0, 1.0, 3).unwrap();
        let eq = Equilibrium::new(&phi).unwrap();
        let mu = random_markov_measure(&full, 4).unwrap();
        let f = LocallyConstantFunction::indicator(&full, &[1]).unwrap();
        let mut prev = f64::INFINITY;
        for n in 2..=20 {
            let r = finitary_check(&eq, &mu, &f, n).unwrap();
            assert_eq!(r.tail_term, Some(0.0));
            assert!((r.radicand_raw.unwrap() - r.pressure_gap).abs() < 1e-12);
            let expected = r.constant * r.f_norm * (0.5f64.powi(n as i32) + r.pressure_gap.sqrt());
            assert!((r.rhs - expected).abs() < 1e-12);
            assert!(r.rhs <= prev);
            prev = r.rhs;
            assert!(r.passed());
        }
    }

    #[test]
    fn finitary_tail_term() {
        let full = TransitionMatrix::full_shift(2);
        let phi = builtin_potential("var-example", &full).unwrap();
        let eq = Equilibrium::new(&phi).unwrap();
        let f = LocallyConstantFunction::indicator(eq.base(), &[0]).unwrap();
        let r = finitary_check(&eq, eq.measure(), &f, 1).unwrap();
        assert!((r.tail_term.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(r.conditional_entropy_with_present, Some(0.0));
    }

    #[test]
    fn finitary_markov_examples() {
        let eq = full2_zero();
        let base = eq.base().clone();
        let f = LocallyConstantFunction::indicator(&base, &[0]).unwrap();
        let r = finitary_markov_check(&eq, eq.measure(), &f, 6, 1).unwrap();
        assert!(r.lhs.abs() < 1e-15);
        assert!((r.block_entropy_rate.unwrap() - LN_2).abs() < 1e-14);
        assert!((r.marginal_term.unwrap() - LN_2 / 5.0).abs() < 1e-14);
        assert!((r.rhs - 3.0 * (0.25 + (LN_2 / 5.0).sqrt())).abs() < 1e-12);

        let delta = MarkovMeasure::point_mass(&base, 0).unwrap();
        let r = finitary_markov_check(&eq, &delta, &f, 9, 1).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-15);
        assert!((r.rhs - 3.0 * (0.0625 + LN_2.sqrt())).abs() < 1e-12);
        assert!(matches!(finitary_markov_check(&eq, &delta, &f, 2, 1), Err(Error::Precondition(_))));
        let phi = builtin_potential("var-example", &base).unwrap();
        let eq2 = Equilibrium::new(&phi).unwrap();
        assert!(matches!(
            finitary_markov_check(&eq2, &delta, &f, 9, 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn finitary_markov_random() {
        for (name, base) in [
            ("golden", TransitionMatrix::golden_mean()),
            ("loop3", TransitionMatrix::loop3()),
            ("full3", TransitionMatrix::full_shift(3)),
        ] {
            let phi = random_function(&base, 2, 0.5, -1.0, 1.0, 11).unwrap();
            let eq = Equilibrium::new(&phi).unwrap();
            for t in 0..30u64 {
                let mu = random_markov_measure(&base, 50 + t).unwrap();
                let f = random_function(&base, 2, 0.5, -1.0, 1.0, 90 + t).unwrap();
                let n = 6 + (t as usize % 13);
                let r = finitary_markov_check(&eq, &mu, &f, n, 2).unwrap();
                assert!(r.passed(), "{name} {t}: {r:?}");
            }
        }
    }

    #[test]
    fn cohomology_examples() {
        let full = TransitionMatrix::full_shift(2);
        assert_eq!(cohomology_residual(&full2_zero()).unwrap(), 0.0);
        let g = Equilibrium::new(&LocallyConstantFunction::zero(&TransitionMatrix::golden_mean())).unwrap();
        assert!(cohomology_residual(&g).unwrap() <= 1e-12);
        let w = Equilibrium::new(&bernoulli_potential(&full, &[0.3, 0.7], 0.5).unwrap()).unwrap();
        assert!(cohomology_residual(&w).unwrap() <= 1e-12);
        let r = Equilibrium::new(&random_function(&TransitionMatrix::loop3(), 2, 0.5, -2.0, 2.0, 5).unwrap()).unwrap();
        assert!(cohomology_residual(&r).unwrap() <= 1e-10);
    }

    #[test]
    fn entropy_averaging_examples() {
        let full = TransitionMatrix::full_shift(2);
        let eq = full2_zero();
        let mu = MarkovMeasure::bernoulli(&full, &[0.3, 0.7]).unwrap();
        let r = entropy_averaging_check(&eq, &mu, 1, 5).unwrap();
        let h = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        assert!((r.average - h).abs() < 1e-14);
        assert!(r.identity_residual < 1e-10);
        assert!((r.lhs - (LN_2 - h)).abs() < 1e-14);
        assert!((r.rhs - 2.0 * (LN_2 - h)).abs() < 1e-14);
        for base in [TransitionMatrix::golden_mean(), TransitionMatrix::loop3()] {
            let eq = Equilibrium::new(&random_function(&base, 2, 0.5, -1.0, 1.0, 8).unwrap()).unwrap();
            for t in 0..20 {
                let mu = random_markov_measure(&base, t).unwrap();
                for (ell, m) in [(1, 2), (1, 5), (2, 9), (3, 4)] {
                    let r = entropy_averaging_check(&eq, &mu, ell, m).unwrap();
                    assert!(r.identity_residual < 1e-10);
                    assert!(r.slack >= 0.0, "{r:?}");
                }
            }
        }
    }
}
