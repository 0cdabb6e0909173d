//! Approximation of Gibbs measures: truncations of a countable weighted full
//! shift, measures on periodic orbits, and stability under perturbation of
//! the potential.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::potential::{LocallyConstantFunction, DEFAULT_THETA};
use crate::shift::{TransitionMatrix, DEFAULT_WORD_CAP};
use crate::transfer::{Equilibrium, PerronData};

/// `zeta(s, a) = sum_{j >= 0} (a + j)^{-s}` for `s > 1, a > 0`, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const N: usize = 12;
    // B_{2k} / (2k)!
    const COEFFS: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30_240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
        1.0 / 74_724_249_600.0,
    ];
    let head: f64 = (0..N).map(|j| (a + j as f64).powf(-s)).sum();
    let x = a + N as f64;
    let mut sum = head + x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) times x^{-s-2k+1}
    let mut rising = s;
    let mut power = x.powf(-s - 1.0);
    for (k, c) in COEFFS.iter().enumerate() {
        sum += c * rising * power;
        let m = 2.0 * k as f64 + 1.0;
        rising *= (s + m) * (s + m + 1.0);
        power /= x * x;
    }
    sum
}

/// Positive summable weights `w_1, w_2, ...` with closed-form tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    /// `w_s = scale * ratio^s`.
    Geometric { ratio: f64, scale: f64 },
    /// `w_s = scale * s^{-exponent}`.
    Zeta { exponent: f64, scale: f64 },
}

/// Countable full shift on `{1, 2, ...}` with `phi(x) = log w_{x_0}`. Its Gibbs
/// measure is Bernoulli with masses `w_s / sum w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountableModel {
    family: WeightFamily,
}

impl CountableModel {
    pub fn geometric(ratio: f64, scale: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0 && scale > 0.0) {
            return Err(Error::InvalidParameter("geometric weights need 0 < ratio < 1, scale > 0".into()));
        }
        Ok(CountableModel {
            family: WeightFamily::Geometric { ratio, scale },
        })
    }

    pub fn zeta(exponent: f64, scale: f64) -> Result<Self> {
        if !(exponent > 1.0 && scale > 0.0) {
            return Err(Error::InvalidParameter("zeta weights need exponent > 1, scale > 0".into()));
        }
        Ok(CountableModel {
            family: WeightFamily::Zeta { exponent, scale },
        })
    }

    /// Parses `geometric(r)`, `geometric(r, scale)`, `zeta(s)`, `zeta(s, scale)`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown weight family '{text}'"));
        let t = text.trim();
        let open = t.find('(').ok_or_else(bad)?;
        let inner = t[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<f64> = inner
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let scale = match args.len() {
            1 => 1.0,
            2 => args[1],
            _ => return Err(bad()),
        };
        match t[..open].trim() {
            "geometric" => Self::geometric(args[0], scale),
            "zeta" => Self::zeta(args[0], scale),
            _ => Err(bad()),
        }
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    /// `w_s`, states numbered from 1.
    pub fn weight(&self, s: usize) -> f64 {
        match self.family {
            WeightFamily::Geometric { ratio, scale } => scale * ratio.powi(s as i32),
            WeightFamily::Zeta { exponent, scale } => scale * (s as f64).powf(-exponent),
        }
    }

    pub fn total(&self) -> f64 {
        self.tail(0)
    }

    /// `sum_{s > n} w_s`.
    pub fn tail(&self, n: usize) -> f64 {
        match self.family {
            WeightFamily::Geometric { ratio, scale } => scale * ratio.powi(n as i32 + 1) / (1.0 - ratio),
            WeightFamily::Zeta { exponent, scale } => scale * hurwitz_zeta(exponent, n as f64 + 1.0),
        }
    }

    /// `log sum w`.
    pub fn pressure(&self) -> f64 {
        self.total().ln()
    }

    /// Pressure of the truncation to the first `n` states.
    pub fn truncated_pressure(&self, n: usize) -> f64 {
        let partial: f64 = (1..=n).map(|s| self.weight(s)).sum();
        partial.ln()
    }

    /// `P - P_n = -log(1 - tail(n) / total)`.
    pub fn pressure_gap(&self, n: usize) -> f64 {
        -(-self.tail(n) / self.total()).ln_1p()
    }

    /// Gibbs mass of state `s`.
    pub fn mass(&self, s: usize) -> f64 {
        self.weight(s) / self.total()
    }

    /// Constant for observables of range `r` from the closed-form Gibbs data:
    /// the normalized operator is rank one (`kappa = 0`, `c = 1`) and the
    /// eigenfunction is constant, so `a = sqrt(2) r`.
    pub fn constant_a(&self, range: usize) -> f64 {
        std::f64::consts::SQRT_2 * range.max(1) as f64
    }

    pub fn truncate(&self, n: usize) -> Result<FiniteSubsystem> {
        if n < 2 {
            return Err(Error::InvalidParameter("truncation needs n >= 2".into()));
        }
        let base = TransitionMatrix::full_shift_numbered(n);
        let logs: Vec<f64> = (1..=n).map(|s| self.weight(s).ln()).collect();
        let phi = LocallyConstantFunction::from_state_values(&base, DEFAULT_THETA, &logs)?;
        let mut sub = FiniteSubsystem::new(&phi)?;
        sub.parent = Some((*self, n));
        Ok(sub)
    }

    /// `m(f)` for an observable on a truncation base, extended by zero.
    pub fn integrate_extended(&self, f: &LocallyConstantFunction) -> Result<f64> {
        let mut total = 0.0;
        f.base().for_each_word(f.range(), DEFAULT_WORD_CAP, |w| {
            let mass: f64 = w.iter().map(|&s| self.mass(s + 1)).product();
            total += mass * f.value(w);
        })?;
        Ok(total)
    }
}

/// A finite mixing shift with a Markovian potential and its Gibbs data,
/// optionally remembered as the truncation of a countable model.
#[derive(Debug, Clone)]
pub struct FiniteSubsystem {
    equilibrium: Equilibrium,
    parent: Option<(CountableModel, usize)>,
}

impl FiniteSubsystem {
    pub fn new(phi: &LocallyConstantFunction) -> Result<Self> {
        if phi.range() > 2 {
            return Err(Error::RangeTooLarge(phi.range()));
        }
        Ok(FiniteSubsystem {
            equilibrium: Equilibrium::new(phi)?,
            parent: None,
        })
    }

    pub fn base(&self) -> &TransitionMatrix {
        self.equilibrium.base()
    }

    pub fn potential(&self) -> &LocallyConstantFunction {
        self.equilibrium.potential()
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        &self.equilibrium
    }

    pub fn perron(&self) -> &PerronData {
        self.equilibrium.perron()
    }

    pub fn pressure(&self) -> f64 {
        self.equilibrium.pressure()
    }

    /// The countable model and truncation level, if any.
    pub fn parent(&self) -> Option<(CountableModel, usize)> {
        self.parent
    }
}

/// Finitely supported observable on a countable model: a table over the
/// first `support` states, zero whenever a coordinate lies outside.
///
/// Stored on the full shift over `support + 1` symbols whose last symbol
/// stands for every state outside the support.
#[derive(Debug, Clone)]
pub struct CountableObservable {
    support: usize,
    table: LocallyConstantFunction,
}

impl CountableObservable {
    /// `f` receives words over `0..support` (state `s + 1` is symbol `s`).
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(support: usize, range: usize, theta: f64, mut f: F) -> Result<Self> {
        let base = TransitionMatrix::full_shift_numbered(support + 1);
        let table = LocallyConstantFunction::from_fn(&base, range, theta, |w| {
            if w.contains(&support) {
                0.0
            } else {
                f(w)
            }
        })?;
        Ok(CountableObservable { support, table })
    }

    /// `1_{[s]}` for a state `s >= 1`.
    pub fn indicator(state: usize) -> Result<Self> {
        if state == 0 {
            return Err(Error::InvalidParameter("states are numbered from 1".into()));
        }
        Self::from_fn(state, 1, DEFAULT_THETA, |w| if w[0] + 1 == state { 1.0 } else { 0.0 })
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn range(&self) -> usize {
        self.table.range()
    }

    /// Norm on the countable shift (all outside states act alike).
    pub fn l_norm(&self) -> f64 {
        self.table.l_norm()
    }

    fn integrate_with(&self, mass: impl Fn(usize) -> f64) -> Result<f64> {
        let mut total = 0.0;
        let outside = self.support;
        self.table.base().for_each_word(self.range(), DEFAULT_WORD_CAP, |w| {
            if w.iter().all(|&s| s != outside) {
                total += self.table.value(w) * w.iter().map(|&s| mass(s + 1)).product::<f64>();
            }
        })?;
        Ok(total)
    }

    pub fn integrate_full(&self, model: &CountableModel) -> Result<f64> {
        self.integrate_with(|s| model.mass(s))
    }

    /// Integral against the Gibbs measure of the truncation to `n` states.
    pub fn integrate_truncated(&self, model: &CountableModel, n: usize) -> Result<f64> {
        let z: f64 = (1..=n).map(|s| model.weight(s)).sum();
        self.integrate_with(|s| if s <= n { model.weight(s) / z } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pressure_gap: f64,
    pub constant: f64,
    pub f_norm: f64,
    /// The observable sees states beyond the truncation.
    pub support_outside: bool,
}

impl TruncationRow {
    pub fn passed(&self) -> bool {
        self.support_outside || self.slack >= 0.0
    }
}

/// `|m(f) - m_n(f)|` against `a ||f||_L (P - P_n)^(1/2)` for each `n`.
pub fn truncation_harness(
    model: &CountableModel,
    f: &CountableObservable,
    ns: impl IntoIterator<Item = usize>,
) -> Result<Vec<TruncationRow>> {
    let full = f.integrate_full(model)?;
    let a = model.constant_a(f.range());
    let norm = f.l_norm();
    ns.into_iter()
        .map(|n| {
            if n < 2 {
                return Err(Error::InvalidParameter("truncation needs n >= 2".into()));
            }
            let lhs = (full - f.integrate_truncated(model, n)?).abs();
            let gap = model.pressure_gap(n);
            let rhs = a * norm * gap.sqrt();
            Ok(TruncationRow {
                n,
                lhs,
                rhs,
                slack: rhs - lhs,
                pressure_gap: gap,
                constant: a,
                f_norm: norm,
                support_outside: f.support() > n,
            })
        })
        .collect()
}

/// Least-squares slopes of `log lhs` and `log rhs` against `n`, over rows
/// with positive values.
pub fn decay_exponents(rows: &[TruncationRow]) -> (f64, f64) {
    fn slope(points: &[(f64, f64)]) -> f64 {
        let k = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
        let my = points.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
    let lhs: Vec<(f64, f64)> = rows.iter().filter(|r| r.lhs > 0.0).map(|r| (r.n as f64, r.lhs.ln())).collect();
    let rhs: Vec<(f64, f64)> = rows.iter().filter(|r| r.rhs > 0.0).map(|r| (r.n as f64, r.rhs.ln())).collect();
    (slope(&lhs), slope(&rhs))
}

/// Probability on the period-`k` points with weights `exp(phi_k)`.
#[derive(Debug, Clone)]
pub struct PeriodicMeasure {
    pub k: usize,
    /// One atom per cyclically admissible word.
    pub atoms: Vec<(Vec<usize>, f64)>,
    /// `sum exp(phi_k(y))`, the inverse of the normalizer.
    pub normalizer_inverse: f64,
    /// `trace(B^k)`.
    pub trace: f64,
    pub trace_relative_difference: f64,
}

impl PeriodicMeasure {
    pub fn new(sub: &FiniteSubsystem, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("period must be >= 1".into()));
        }
        let phi = sub.potential();
        let mut atoms = Vec::new();
        let mut total = 0.0;
        sub.base().for_each_periodic(k, DEFAULT_WORD_CAP, |w| {
            let weight = phi.cyclic_sum_unchecked(w).exp();
            total += weight;
            atoms.push((w.to_vec(), weight));
        })?;
        if atoms.is_empty() {
            return Err(Error::Precondition(format!("no points of period {k}")));
        }
        for atom in atoms.iter_mut() {
            atom.1 /= total;
        }
        let b = sub.perron().weights();
        let mut power = DMatrix::<f64>::identity(b.nrows(), b.ncols());
        for _ in 0..k {
            power = &power * b;
        }
        let trace = power.trace();
        Ok(PeriodicMeasure {
            k,
            atoms,
            normalizer_inverse: total,
            trace,
            trace_relative_difference: (total - trace).abs() / total.abs().max(trace.abs()),
        })
    }

    /// `c = 1 / sum exp(phi_k)`.
    pub fn normalizer(&self) -> f64 {
        1.0 / self.normalizer_inverse
    }

    pub fn integrate(&self, f: &LocallyConstantFunction) -> f64 {
        self.atoms.iter().map(|(w, m)| m * f.value_at_periodic(w)).sum()
    }

    /// Law of the first symbol.
    pub fn marginal(&self, size: usize) -> Vec<f64> {
        let mut out = vec![0.0; size];
        for (w, m) in &self.atoms {
            out[w[0]] += m;
        }
        out
    }

    /// Entropy of the length-`k` cylinder partition; each cylinder holds one atom.
    pub fn block_entropy(&self) -> f64 {
        crate::measures::shannon_entropy(&self.atoms.iter().map(|a| a.1).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicIdentity {
    /// `(1/k) H(xi_0^{k-1}) + nu(phi)`.
    pub lhs: f64,
    /// `-(1/k) log c`.
    pub rhs: f64,
    pub residual: f64,
}

pub fn periodic_identity_check(nu: &PeriodicMeasure, sub: &FiniteSubsystem) -> PeriodicIdentity {
    let k = nu.k as f64;
    let lhs = nu.block_entropy() / k + nu.integrate(sub.potential());
    let rhs = nu.normalizer_inverse.ln() / k;
    PeriodicIdentity {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicRow {
    pub k: usize,
    /// `|m_n(f) - nu^k(f)|`.
    pub lhs: f64,
    /// `b (theta^{k/2} + (2 |S| delta^k / k + 2/(k-2) H_nu(xi))^(1/2))`.
    pub rhs: f64,
    pub slack: f64,
    /// Same with `theta^floor((k-2)/2)`.
    pub rhs_floor_exponent: f64,
    /// Finite-range bound evaluated on nu directly (`ell = 2`, `n = k`) with
    /// the exact `P + (1/k) log c` in place of its spectral estimate.
    pub rhs_exact_gap: f64,
    /// `P + (1/k) log c`.
    pub periodic_gap: f64,
    /// `|S| delta^k / (k/2)`.
    pub spectral_estimate: f64,
    /// `periodic_gap` exceeds its spectral estimate: not yet asymptotic.
    pub pre_asymptotic: bool,
    pub entropy_term: f64,
    pub constant: f64,
    pub delta: f64,
    /// `|m(f) - nu^k(f)|` for truncations of a countable model.
    pub combined_lhs: Option<f64>,
    /// `||f||_L (a (P - P_n)^(1/2)) + rhs` for truncations.
    pub combined_rhs: Option<f64>,
}

impl PeriodicRow {
    pub fn passed(&self) -> bool {
        self.pre_asymptotic || (self.slack >= 0.0 && self.combined_ok())
    }

    fn combined_ok(&self) -> bool {
        match (self.combined_lhs, self.combined_rhs) {
            (Some(l), Some(r)) => r >= l,
            _ => true,
        }
    }
}

/// Compares periodic-orbit measures with the Gibbs measure for each `k >= 3`.
pub fn periodic_harness(
    sub: &FiniteSubsystem,
    f: &LocallyConstantFunction,
    ks: impl IntoIterator<Item = usize>,
) -> Result<Vec<PeriodicRow>> {
    if f.base() != sub.base() {
        return Err(Error::MismatchedShift);
    }
    let pd = sub.perron();
    let consts = pd.constants_for_range(f.range());
    let b = consts.b;
    let norm = f.l_norm();
    let delta = pd.lambda2_mod / pd.lambda;
    let size = sub.base().size() as f64;
    let theta = f.theta();
    let m_f = sub.equilibrium().measure().integrate(f)?;
    let outer = match sub.parent() {
        Some((model, n)) => Some((
            model.integrate_extended(f)?,
            model.constant_a(f.range()) * model.pressure_gap(n).sqrt(),
        )),
        None => None,
    };
    ks.into_iter()
        .map(|k| {
            if k < 3 {
                return Err(Error::InvalidParameter("period must be >= 3".into()));
            }
            let nu = PeriodicMeasure::new(sub, k)?;
            let kf = k as f64;
            let nu_f = nu.integrate(f);
            let lhs = (m_f - nu_f).abs();
            let periodic_gap = sub.pressure() + nu.normalizer().ln() / kf;
            let spectral_estimate = size * delta.powi(k as i32) / (kf / 2.0);
            let pre_asymptotic = periodic_gap > spectral_estimate + 1e-12;
            let entropy_term = 2.0 / (kf - 2.0) * crate::measures::shannon_entropy(&nu.marginal(sub.base().size()));
            let root = (2.0 * size * delta.powi(k as i32) / kf + entropy_term).sqrt();
            let rhs = b * norm * (theta.powf(kf / 2.0) + root);
            let rhs_floor_exponent = b * norm * (theta.powi(((k - 2) / 2) as i32) + root);
            let exact = (periodic_gap + entropy_term).max(0.0).sqrt();
            let rhs_exact_gap = b * norm * (theta.powi(((k - 2) / 2) as i32) + exact);
            let (combined_lhs, combined_rhs) = match outer {
                Some((full_f, outer_term)) => (Some((full_f - nu_f).abs()), Some(norm * outer_term + rhs)),
                None => (None, None),
            };
            Ok(PeriodicRow {
                k,
                lhs,
                rhs,
                slack: rhs - lhs,
                rhs_floor_exponent,
                rhs_exact_gap,
                periodic_gap,
                spectral_estimate,
                pre_asymptotic,
                entropy_term,
                constant: b,
                delta,
                combined_lhs,
                combined_rhs,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// `|mu_phi(f) - mu_psi(f)|`.
    pub lhs: f64,
    /// `a_phi ||f||_L ||phi~ - psi~||_inf^(1/2)`, tildes denoting zero-pressure normalization.
    pub rhs: f64,
    pub slack: f64,
    pub sup_distance: f64,
    /// `a_phi ||f||_L (-h_{mu_psi} - mu_psi(phi~))^(1/2)`.
    pub rhs_pressure_gap: f64,
    /// `-h_{mu_psi} - mu_psi(phi~)`.
    pub gap: f64,
    /// `mu_psi(psi~ - phi~)`.
    pub gap_as_integral: f64,
    pub identity_residual: f64,
    pub constant: f64,
    pub f_norm: f64,
}

/// Equilibria of two Markovian potentials on one shift.
pub fn stability_check(
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    f: &LocallyConstantFunction,
) -> Result<StabilityReport> {
    if phi.base() != psi.base() || phi.base() != f.base() {
        return Err(Error::MismatchedShift);
    }
    for g in [phi, psi] {
        if g.range() > 2 {
            return Err(Error::RangeTooLarge(g.range()));
        }
    }
    let phi_n = phi.normalize_zero_pressure()?;
    let psi_n = psi.normalize_zero_pressure()?;
    let eq_phi = Equilibrium::new(&phi_n)?;
    let eq_psi = Equilibrium::new(&psi_n)?;
    let mu_phi = eq_phi.measure();
    let mu_psi = eq_psi.measure();
    let lhs = (mu_phi.integrate(f)? - mu_psi.integrate(f)?).abs();
    let a = eq_phi.perron().constants_for_range(f.range()).a;
    let norm = f.l_norm();
    let sup_distance = phi_n.sup_distance(&psi_n)?;
    let gap = -mu_psi.entropy_rate() - mu_psi.integrate(&phi_n)?;
    let gap_as_integral = mu_psi.integrate(&psi_n.sub(&phi_n)?)?;
    let rhs = a * norm * sup_distance.sqrt();
    Ok(StabilityReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        sup_distance,
        rhs_pressure_gap: a * norm * gap.max(0.0).sqrt(),
        gap,
        gap_as_integral,
        identity_residual: (gap - gap_as_integral).abs(),
        constant: a,
        f_norm: norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_function;
    use std::f64::consts::{LN_2, PI, SQRT_2};

    fn geometric() -> CountableModel {
        CountableModel::geometric(0.5, 1.0).unwrap()
    }

    #[test]
    fn hurwitz_values() {
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(4.0, 1.0) - PI.powi(4) / 90.0).abs() < 1e-14);
        let partial: f64 = (1..=10).map(|s| 1.0 / (s * s) as f64).sum();
        assert!((hurwitz_zeta(2.0, 11.0) - (PI * PI / 6.0 - partial)).abs() < 1e-14);
        // zeta(1.5) = 2.612375348685488...
        assert!((hurwitz_zeta(1.5, 1.0) - 2.612_375_348_685_488).abs() < 1e-13);
    }

    #[test]
    fn model_parsing() {
        assert_eq!(CountableModel::parse("geometric(0.5)").unwrap(), geometric());
        let z = CountableModel::parse("zeta(2, 3)").unwrap();
        assert_eq!(z.family(), WeightFamily::Zeta { exponent: 2.0, scale: 3.0 });
        assert!(CountableModel::parse("geometric(1.5)").is_err());
        assert!(CountableModel::parse("poisson(1)").is_err());
    }

    #[test]
    fn truncation_examples() {
        let m = geometric();
        assert!(m.pressure().abs() < 1e-15);
        for n in 2..=20 {
            let expected = (1.0 - 0.5f64.powi(n as i32)).ln();
            assert!((m.truncated_pressure(n) - expected).abs() < 1e-14);
            assert!((m.pressure_gap(n) + expected).abs() < 1e-15);
        }
        let sub = m.truncate(2).unwrap();
        let pi = sub.equilibrium().measure().stationary().to_vec();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-14 && (pi[1] - 1.0 / 3.0).abs() < 1e-14);
        assert!((sub.pressure() - (0.75f64).ln()).abs() < 1e-14);
        let mut prev = f64::NEG_INFINITY;
        for n in 2..=12 {
            let p = m.truncate(n).unwrap().pressure();
            assert!(p >= prev && p <= m.pressure());
            prev = p;
        }
        // rank-one normalized operator: the closed-form constant matches the computed one
        let d = m.truncate(8).unwrap();
        assert!((d.perron().a - m.constant_a(1)).abs() < 1e-10);
        let z = CountableModel::zeta(2.0, 1.0).unwrap();
        let partial: f64 = (1..=30).map(|s| z.weight(s)).sum();
        assert!((z.tail(30) - (z.total() - partial)).abs() < 1e-14);
    }

    #[test]
    fn truncation_harness_geometric() {
        let m = geometric();
        let f = CountableObservable::indicator(1).unwrap();
        assert!((f.integrate_full(&m).unwrap() - 0.5).abs() < 1e-15);
        let rows = truncation_harness(&m, &f, 2..=20).unwrap();
        assert_eq!(rows.len(), 19);
        for r in &rows {
            let t = 0.5f64.powi(r.n as i32);
            assert!((r.lhs - t / (2.0 * (1.0 - t))).abs() < 1e-15);
            assert!((r.rhs - SQRT_2 * (-(1.0 - t).ln()).sqrt()).abs() < 1e-12);
            assert!(r.passed());
        }
        let (ls, rs) = decay_exponents(&rows);
        assert!((ls / -LN_2 - 1.0).abs() < 0.1);
        assert!((rs / (-LN_2 / 2.0) - 1.0).abs() < 0.1);
    }

    #[test]
    fn countable_observable_support() {
        let m = geometric();
        let f = CountableObservable::from_fn(5, 2, 0.5, |w| (w[0] + w[1]) as f64).unwrap();
        let rows = truncation_harness(&m, &f, [3, 6]).unwrap();
        assert!(rows[0].support_outside && !rows[1].support_outside);
        // brute force over the first 60 states
        let brute: f64 = (1..=5)
            .flat_map(|i| (1..=5).map(move |j| (i, j)))
            .map(|(i, j)| ((i - 1 + j - 1) as f64) * m.mass(i) * m.mass(j))
            .sum();
        assert!((f.integrate_full(&m).unwrap() - brute).abs() < 1e-14);
    }

    #[test]
    fn periodic_measure_examples() {
        let full = crate::shift::TransitionMatrix::full_shift(2);
        let sub = FiniteSubsystem::new(&LocallyConstantFunction::zero(&full)).unwrap();
        let nu = PeriodicMeasure::new(&sub, 2).unwrap();
        assert_eq!(nu.atoms.len(), 4);
        assert!(nu.atoms.iter().all(|a| (a.1 - 0.25).abs() < 1e-15));
        assert_eq!((nu.normalizer_inverse, nu.trace), (4.0, 4.0));
        let id = periodic_identity_check(&nu, &sub);
        assert!((id.lhs - LN_2).abs() < 1e-15 && id.residual < 1e-15);

        let g = FiniteSubsystem::new(&LocallyConstantFunction::zero(&crate::shift::TransitionMatrix::golden_mean())).unwrap();
        let nu = PeriodicMeasure::new(&g, 3).unwrap();
        assert_eq!(nu.atoms.len(), 4);
        assert!((nu.trace - 4.0).abs() < 1e-12);
        let id = periodic_identity_check(&nu, &g);
        assert!((id.rhs - 4f64.ln() / 3.0).abs() < 1e-15 && id.residual < 1e-14);

        let w = FiniteSubsystem::new(&crate::transfer::bernoulli_potential(&full, &[0.3, 0.7], 0.5).unwrap()).unwrap();
        let nu = PeriodicMeasure::new(&w, 1).unwrap();
        assert!((nu.atoms[0].1 - 0.3).abs() < 1e-15 && (nu.atoms[1].1 - 0.7).abs() < 1e-15);
        assert!((nu.normalizer_inverse - 1.0).abs() < 1e-15);
        assert!(periodic_identity_check(&nu, &w).residual < 1e-15);

        for sys in [&sub, &g, &w] {
            for k in 1..=12 {
                let nu = PeriodicMeasure::new(sys, k).unwrap();
                assert!(nu.trace_relative_difference < 1e-10);
                assert!(periodic_identity_check(&nu, sys).residual < 1e-10);
            }
        }
    }

    #[test]
    fn periodic_harness_examples() {
        let full = crate::shift::TransitionMatrix::full_shift(2);
        let sub = FiniteSubsystem::new(&LocallyConstantFunction::zero(&full)).unwrap();
        let f = LocallyConstantFunction::indicator(&full, &[0]).unwrap();
        for row in periodic_harness(&sub, &f, 3..=12).unwrap() {
            assert!(row.lhs < 1e-15 && !row.pre_asymptotic && row.passed());
            assert_eq!(row.delta, 0.0);
        }
        let golden = crate::shift::TransitionMatrix::golden_mean();
        let g = FiniteSubsystem::new(&LocallyConstantFunction::zero(&golden)).unwrap();
        let f = LocallyConstantFunction::indicator(&golden, &[0]).unwrap();
        let rows = periodic_harness(&g, &f, 3..=16).unwrap();
        for r in &rows {
            assert!(r.passed(), "{r:?}");
            assert!(r.rhs <= r.rhs_floor_exponent);
        }
        let k12 = &rows[9];
        assert!(k12.entropy_term > 2.0 * 2.0 * k12.delta.powi(12) / 12.0);
        assert!(rows[13].lhs < rows[5].lhs);
    }

    #[test]
    fn periodic_harness_on_truncation() {
        let m = geometric();
        let sub = m.truncate(4).unwrap();
        let f = LocallyConstantFunction::indicator(sub.base(), &[0]).unwrap();
        for r in periodic_harness(&sub, &f, 3..=8).unwrap() {
            assert!(r.combined_rhs.unwrap() >= r.combined_lhs.unwrap());
        }
    }

    #[test]
    fn stability_examples() {
        let full = crate::shift::TransitionMatrix::full_shift(2);
        let phi = LocallyConstantFunction::zero(&full);
        let psi = LocallyConstantFunction::from_state_values(&full, 0.5, &[0.1, -0.1]).unwrap();
        let f = LocallyConstantFunction::indicator(&full, &[0]).unwrap();
        let r = stability_check(&phi, &psi, &f).unwrap();
        let pa = 0.1f64.exp() / (2.0 * 0.1f64.cosh());
        assert!((r.lhs - (pa - 0.5)).abs() < 1e-14);
        assert!((r.lhs - 0.04983).abs() < 1e-4);
        assert!((r.sup_distance - (0.1 + (0.1f64).cosh().ln())).abs() < 1e-14);
        assert!((r.rhs - SQRT_2 * r.sup_distance.sqrt()).abs() < 1e-12);
        assert!(r.rhs >= 0.458 && r.identity_residual < 1e-10);
        assert!(r.rhs_pressure_gap <= r.rhs + 1e-12);

        let same = stability_check(&phi, &phi, &f).unwrap();
        assert!(same.lhs == 0.0 && same.rhs == 0.0);
        let shifted = stability_check(&psi, &psi.shift_by(0.7), &f).unwrap();
        assert!(shifted.lhs < 1e-14 && shifted.sup_distance < 1e-14);
    }

    #[test]
    fn stability_random() {
        let g = crate::shift::TransitionMatrix::golden_mean();
        for t in 0..20u64 {
            let phi = random_function(&g, 2, 0.5, -1.0, 1.0, t).unwrap();
            let d = random_function(&g, 2, 0.5, -0.5, 0.5, 100 + t).unwrap();
            let psi = phi.add(&d).unwrap();
            let f = random_function(&g, 2, 0.5, -1.0, 1.0, 200 + t).unwrap();
            let r = stability_check(&phi, &psi, &f).unwrap();
            assert!(r.slack >= 0.0 && r.identity_residual < 1e-10, "{r:?}");
        }
    }
}
