//! Ruelle transfer operator for Markovian (range <= 2) potentials.
//!
//! The weighted matrix is `B_ij = t_ij exp(phi(i, j))` and the operator acts on
//! one-coordinate functions by `(L v)_j = sum_i B_ij v_i` (preimages prepend a
//! symbol). Hence `h` is the left Perron vector of `B`, `nu` the right one, and
//! the Gibbs measure is the Markov chain
//!
//! ```text
//! p_ij = B_ij nu_j / (lambda nu_i),    pi_i = h_i nu_i.
//! ```
//!
//! The normalized operator `f -> h^{-1} L(h f) / lambda` on one-coordinate
//! functions is the stochastic matrix `Q_ji = h_i B_ij / (lambda h_j)`, the
//! reverse kernel of the Gibbs chain. Its deviation `Q^n - 1 pi` drives the
//! spectral constants `kappa`, `c` and the bound constants `a`, `b`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, SpectrumMethod, EXACT_SPECTRUM_MAX};
use crate::measures::MarkovMeasure;
use crate::potential::LocallyConstantFunction;
use crate::shift::{BlockRecoding, TransitionMatrix, DEFAULT_WORD_CAP};

pub use crate::linalg::SpectrumMethod as Spectrum;

/// Number of operator powers probed when estimating `c`.
pub const SPECTRAL_PROBE_STEPS: usize = 50;
/// Deviations `||Q^n - 1 pi||` below this are roundoff and skip the ratio test.
pub const SPECTRAL_FLOOR: f64 = 1e-13;
const KAPPA_ZERO: f64 = 1e-12;

/// `B_ij = t_ij exp(phi(i, j))`; a range-1 `phi` uses `phi(i)`.
pub fn transfer_matrix(phi: &LocallyConstantFunction) -> Result<DMatrix<f64>> {
    if phi.range() > 2 {
        return Err(Error::RangeTooLarge(phi.range()));
    }
    let a = phi.base();
    let n = a.size();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if a.allowed(i, j) {
            phi.value(&[i, j]).exp()
        } else {
            0.0
        }
    }))
}

/// Constants `(c, a, b)` valid for observables of a given range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConstants {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct PerronData {
    base: TransitionMatrix,
    weights: DMatrix<f64>,
    pub lambda: f64,
    pub pressure: f64,
    /// Left eigenvector, geometric mean 1.
    pub h: Vec<f64>,
    /// Right eigenvector with `sum h_i nu_i = 1`.
    pub nu: Vec<f64>,
    pub pi: Vec<f64>,
    pub p: DMatrix<f64>,
    /// Normalized operator on one-coordinate functions (row-stochastic).
    pub q: DMatrix<f64>,
    pub lambda2_mod: f64,
    pub kappa: f64,
    pub spectrum: SpectrumMethod,
    /// Prefactor for one-coordinate observables.
    pub c: f64,
    /// `max(h) * max(1/h)`.
    pub eigen_product: f64,
    pub a: f64,
    pub b: f64,
}

impl PerronData {
    /// Perron–Frobenius data of a nonnegative matrix supported exactly on the
    /// edges of a mixing shift.
    pub fn compute(base: &TransitionMatrix, weights: DMatrix<f64>) -> Result<Self> {
        let n = base.size();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::InvalidParameter("weight matrix shape does not match shift".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                let ok = if base.allowed(i, j) {
                    w > 0.0 && w.is_finite()
                } else {
                    w == 0.0
                };
                if !ok {
                    return Err(Error::InvalidParameter(format!(
                        "weight ({}, {}) = {w} does not match the adjacency",
                        base.label(i),
                        base.label(j)
                    )));
                }
            }
        }
        base.require_mixing()?;

        let perron = linalg::perron(&weights)?;
        let lambda = perron.lambda;
        let log_mean = perron.left.iter().map(|x| x.ln()).sum::<f64>() / n as f64;
        let h: Vec<f64> = perron.left.iter().map(|x| x / log_mean.exp()).collect();
        let dot: f64 = h.iter().zip(&perron.right).map(|(a, b)| a * b).sum();
        let nu: Vec<f64> = perron.right.iter().map(|x| x / dot).collect();
        let pi: Vec<f64> = h.iter().zip(&nu).map(|(a, b)| a * b).collect();

        let mut p = DMatrix::from_fn(n, n, |i, j| weights[(i, j)] * nu[j] / (lambda * nu[i]));
        let mut q = DMatrix::from_fn(n, n, |j, i| h[i] * weights[(i, j)] / (lambda * h[j]));
        for m in [&mut p, &mut q] {
            for i in 0..n {
                let s: f64 = m.row(i).sum();
                for j in 0..n {
                    m[(i, j)] /= s;
                }
            }
        }

        let (lambda2_mod, spectrum) = if n == 1 {
            (0.0, SpectrumMethod::Exact)
        } else if n <= EXACT_SPECTRUM_MAX {
            let mods = linalg::eigenvalue_moduli(&weights);
            (mods[1], SpectrumMethod::Exact)
        } else {
            let e = deviation(&q, &pi);
            (linalg::deflated_radius(&e) * lambda, SpectrumMethod::Deflated)
        };
        let mut kappa = lambda2_mod / lambda;
        if kappa >= 1.0 {
            return Err(Error::NotMixing);
        }
        let e = deviation(&q, &pi);
        let c = match spectral_prefactor(&e, kappa) {
            Some(c) => c,
            None => {
                // negligible spectrum yet a non-vanishing deviation: fall back
                // to the growth rate of the deviation powers
                kappa = deviation_growth(&e);
                spectral_prefactor(&e, kappa).unwrap_or(1.0)
            }
        };
        let hmax = h.iter().fold(0.0f64, |a, &x| a.max(x));
        let hmin = h.iter().fold(f64::INFINITY, |a, &x| a.min(x));
        let eigen_product = hmax / hmin;
        let a = std::f64::consts::SQRT_2 * c / (1.0 - kappa) * eigen_product;
        let b = (std::f64::consts::FRAC_1_SQRT_2 + std::f64::consts::SQRT_2) * a;

        Ok(PerronData {
            base: base.clone(),
            weights,
            lambda,
            pressure: lambda.ln(),
            h,
            nu,
            pi,
            p,
            q,
            lambda2_mod,
            kappa,
            spectrum,
            c,
            eigen_product,
            a,
            b,
        })
    }

    pub fn for_potential(phi: &LocallyConstantFunction) -> Result<Self> {
        Self::compute(phi.base(), transfer_matrix(phi)?)
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn gibbs_measure(&self) -> MarkovMeasure {
        MarkovMeasure::from_parts(&self.base, self.p.clone(), self.pi.clone())
    }

    /// Constants for observables of range `r`.
    ///
    /// The first `r - 1` applications of the normalized operator are exact
    /// averages (sup-norm contractions that lower the range by one), each
    /// contributing at most `||f||_inf` to the telescoping sum; after them the
    /// one-coordinate estimate with `c` applies. This gives
    /// `c_r = c + (r - 1)(1 - kappa)`.
    pub fn constants_for_range(&self, r: usize) -> SpectralConstants {
        let c = self.c + (r.max(1) - 1) as f64 * (1.0 - self.kappa);
        let a = std::f64::consts::SQRT_2 * c / (1.0 - self.kappa) * self.eigen_product;
        let b = (std::f64::consts::FRAC_1_SQRT_2 + std::f64::consts::SQRT_2) * a;
        SpectralConstants { c, a, b }
    }

    /// `(||h B - lambda h||_inf / (lambda ||h||), ||B nu - lambda nu||_inf / (lambda ||nu||))`.
    pub fn eigen_residuals(&self) -> (f64, f64) {
        let n = self.base.size();
        let hmax = self.h.iter().fold(0.0f64, |a, &x| a.max(x));
        let numax = self.nu.iter().fold(0.0f64, |a, &x| a.max(x));
        let left = (0..n)
            .map(|j| {
                let s: f64 = (0..n).map(|i| self.h[i] * self.weights[(i, j)]).sum();
                (s - self.lambda * self.h[j]).abs()
            })
            .fold(0.0, f64::max);
        let right = (0..n)
            .map(|i| {
                let s: f64 = (0..n).map(|j| self.weights[(i, j)] * self.nu[j]).sum();
                (s - self.lambda * self.nu[i]).abs()
            })
            .fold(0.0, f64::max);
        (left / (self.lambda * hmax), right / (self.lambda * numax))
    }

    /// `||Q^n - 1 pi||_{inf -> inf}` for `n = 0..=steps`.
    pub fn deviation_norms(&self, steps: usize) -> Vec<f64> {
        let e = deviation(&self.q, &self.pi);
        let n = self.base.size();
        let mut power = DMatrix::<f64>::identity(n, n) - DMatrix::from_fn(n, n, |_, j| self.pi[j]);
        let mut out = Vec::with_capacity(steps + 1);
        for _ in 0..=steps {
            out.push(linalg::inf_norm(&power));
            power = &power * &e;
        }
        out
    }

    /// Compares cylinder masses with `exp(phi_n(x) - nP)` for every cylinder
    /// of length `<= n_max`, `x` extending the word by its smallest successor.
    pub fn gibbs_property_certificate(&self, n_max: usize) -> Result<GibbsCertificate> {
        let n = self.base.size();
        let hmin = self.h.iter().fold(f64::INFINITY, |a, &x| a.min(x));
        let hmax = self.h.iter().fold(0.0f64, |a, &x| a.max(x));
        let numin = self.nu.iter().fold(f64::INFINITY, |a, &x| a.min(x));
        let numax = self.nu.iter().fold(0.0f64, |a, &x| a.max(x));
        // ratio = h_{w_0} * lambda nu_{w_last} / B_{w_last, x_n}
        let (mut rho_min, mut rho_max) = (f64::INFINITY, 0.0f64);
        for (j, k) in self.base.edges() {
            let rho = self.lambda * self.nu[j] / self.weights[(j, k)];
            rho_min = rho_min.min(rho);
            rho_max = rho_max.max(rho);
        }
        let window = (hmax * rho_max).max(1.0 / (hmin * rho_min));
        let a_priori = (hmax * numax) / (hmin * numin);

        let mut per_length = Vec::with_capacity(n_max);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let gibbs = self.gibbs_measure();
        for len in 1..=n_max {
            let (mut llo, mut lhi) = (f64::INFINITY, 0.0f64);
            let mut count = 0usize;
            self.base.for_each_word(len, DEFAULT_WORD_CAP, |w| {
                let mass = gibbs.cylinder_mass(w);
                let last = w[len - 1];
                let next = self.base.successors(last)[0];
                let mut log_weight: f64 = w.windows(2).map(|p| self.weights[(p[0], p[1])].ln()).sum();
                log_weight += self.weights[(last, next)].ln();
                let ratio = mass / (log_weight - len as f64 * self.pressure).exp();
                llo = llo.min(ratio);
                lhi = lhi.max(ratio);
                count += 1;
            })?;
            lo = lo.min(llo);
            hi = hi.max(lhi);
            per_length.push(CylinderRatios {
                length: len,
                cylinders: count,
                min_ratio: llo,
                max_ratio: lhi,
            });
        }
        let _ = n;
        let empirical = hi.max(1.0 / lo);
        Ok(GibbsCertificate {
            empirical_c: empirical,
            window_c: window,
            a_priori_c: a_priori,
            min_ratio: lo,
            max_ratio: hi,
            within_window: lo >= (1.0 / window) * (1.0 - 1e-12) && hi <= window * (1.0 + 1e-12),
            per_length,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CylinderRatios {
    pub length: usize,
    pub cylinders: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct GibbsCertificate {
    /// `max(max ratio, 1 / min ratio)` over the probed cylinders.
    pub empirical_c: f64,
    /// Window from eigenvector entries: ratios lie in `[1/window_c, window_c]`.
    pub window_c: f64,
    /// `max(h) max(nu) / (min(h) min(nu))`, reported for reference.
    pub a_priori_c: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub within_window: bool,
    pub per_length: Vec<CylinderRatios>,
}

fn deviation(q: &DMatrix<f64>, pi: &[f64]) -> DMatrix<f64> {
    let n = q.nrows();
    DMatrix::from_fn(n, n, |i, j| q[(i, j)] - pi[j])
}

// c = max(1, max_n ||E^n|| / kappa^n); None when kappa is (numerically) zero
// but some power of E is not.
fn spectral_prefactor(e: &DMatrix<f64>, kappa: f64) -> Option<f64> {
    let mut c: f64 = 1.0;
    let mut power = e.clone();
    for step in 1..=SPECTRAL_PROBE_STEPS {
        let norm = linalg::inf_norm(&power);
        if norm > SPECTRAL_FLOOR {
            let scale = kappa.powi(step as i32);
            if kappa < KAPPA_ZERO || scale == 0.0 {
                return None;
            }
            c = c.max(norm / scale);
        } else {
            break;
        }
        power = &power * e;
    }
    Some(c)
}

fn deviation_growth(e: &DMatrix<f64>) -> f64 {
    let mut power = e.clone();
    let mut rate: f64 = 0.0;
    for step in 1..=SPECTRAL_PROBE_STEPS {
        let norm = linalg::inf_norm(&power);
        if norm <= SPECTRAL_FLOOR {
            break;
        }
        rate = rate.max(norm.powf(1.0 / step as f64));
        power = &power * e;
    }
    rate.min(1.0 - 1e-12)
}

/// Gibbs data for any finite-range potential, recoding to a block shift
/// when the range exceeds 2. Observables and measures used alongside live on
/// [`Equilibrium::base`].
#[derive(Debug, Clone)]
pub struct Equilibrium {
    recoding: Option<BlockRecoding>,
    potential: LocallyConstantFunction,
    perron: PerronData,
    measure: MarkovMeasure,
}

impl Equilibrium {
    pub fn new(phi: &LocallyConstantFunction) -> Result<Self> {
        let recode = phi.recode_to_markovian()?;
        let perron = PerronData::for_potential(&recode.function)?;
        let measure = perron.gibbs_measure();
        Ok(Equilibrium {
            recoding: recode.recoding,
            potential: recode.function,
            perron,
            measure,
        })
    }

    /// The shift everything is computed on (the block shift after recoding).
    pub fn base(&self) -> &TransitionMatrix {
        self.potential.base()
    }

    pub fn recoding(&self) -> Option<&BlockRecoding> {
        self.recoding.as_ref()
    }

    /// The Markovian potential on [`base`](Self::base).
    pub fn potential(&self) -> &LocallyConstantFunction {
        &self.potential
    }

    pub fn perron(&self) -> &PerronData {
        &self.perron
    }

    pub fn measure(&self) -> &MarkovMeasure {
        &self.measure
    }

    pub fn pressure(&self) -> f64 {
        self.perron.pressure
    }

    pub fn theta(&self) -> f64 {
        self.potential.theta()
    }

    /// Moves a function from the original shift onto [`base`](Self::base).
    pub fn lift(&self, f: &LocallyConstantFunction) -> Result<LocallyConstantFunction> {
        if f.base() == self.base() {
            return Ok(f.clone());
        }
        match &self.recoding {
            Some(rec) => f.pull_back(rec),
            None => Err(Error::MismatchedShift),
        }
    }
}

/// Gurevich pressure `log lambda`.
pub fn pressure(phi: &LocallyConstantFunction) -> Result<f64> {
    let recode = phi.recode_to_markovian()?;
    let b = transfer_matrix(&recode.function)?;
    recode.function.base().require_mixing()?;
    Ok(linalg::perron(&b)?.lambda.ln())
}

/// `Z_n(phi, a)` by periodic-point enumeration and as `(B^n)_{aa}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSum {
    pub enumeration: f64,
    pub matrix: f64,
    pub relative_difference: f64,
}

pub fn partition_sum(phi: &LocallyConstantFunction, state: usize, n: usize) -> Result<PartitionSum> {
    let base = phi.base();
    if state >= base.size() {
        return Err(Error::InvalidParameter(format!("state index {state} out of range")));
    }
    let b = transfer_matrix(phi)?;
    let mut enumeration = 0.0;
    base.for_each_periodic(n, DEFAULT_WORD_CAP, |w| {
        if w[0] == state {
            enumeration += phi.cyclic_sum_unchecked(w).exp();
        }
    })?;
    let mut v = vec![0.0; base.size()];
    v[state] = 1.0;
    for _ in 0..n {
        v = row_times(&v, &b);
    }
    let matrix = v[state];
    let scale = enumeration.abs().max(matrix.abs());
    let relative_difference = if scale > 0.0 {
        (enumeration - matrix).abs() / scale
    } else {
        0.0
    };
    Ok(PartitionSum {
        enumeration,
        matrix,
        relative_difference,
    })
}

fn row_times(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|j| (0..n).map(|i| v[i] * m[(i, j)]).sum()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GurevichPoint {
    pub n: usize,
    /// `(1/n) log Z_n(phi, a)`.
    pub estimate: f64,
    /// `log lambda - estimate`.
    pub residual: f64,
}

/// `(1/n) log Z_n` for `n = 1..=n_max` by the matrix route, computed with
/// `B / lambda` to avoid overflow.
pub fn gurevich_estimate(phi: &LocallyConstantFunction, state: usize, n_max: usize) -> Result<Vec<GurevichPoint>> {
    let b = transfer_matrix(phi)?;
    phi.base().require_mixing()?;
    let lambda = linalg::perron(&b)?.lambda;
    let p = lambda.ln();
    let scaled = b / lambda;
    let mut v = vec![0.0; phi.base().size()];
    v[state] = 1.0;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        v = row_times(&v, &scaled);
        let residual = -v[state].ln() / n as f64;
        out.push(GurevichPoint {
            n,
            estimate: p - residual,
            residual,
        });
    }
    Ok(out)
}

/// Weighted full shift with Bernoulli equilibrium: `phi(s) = log w_s`.
pub fn bernoulli_potential(base: &TransitionMatrix, weights: &[f64], theta: f64) -> Result<LocallyConstantFunction> {
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParameter("weights must be positive".into()));
    }
    let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    LocallyConstantFunction::from_state_values(base, theta, &logs)
}
