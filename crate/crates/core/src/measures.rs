//! Shift-invariant Markov measures and their information theory.
//!
//! Everything uses natural logarithms and the convention `0 log 0 = 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::potential::LocallyConstantFunction;
use crate::shift::{TransitionMatrix, DEFAULT_WORD_CAP};

const ROW_SUM_TOL: f64 = 1e-9;

/// Order-1 Markov probability `(pi, p)` on a shift, with `p_ij > 0` only on edges.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    base: TransitionMatrix,
    p: DMatrix<f64>,
    pi: Vec<f64>,
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy of a probability vector.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlogx(x)).sum::<f64>()
}

impl MarkovMeasure {
    /// Validates the kernel against the adjacency and solves for the unique
    /// stationary vector. States outside the recurrent class get mass zero.
    pub fn new(base: &TransitionMatrix, p: DMatrix<f64>) -> Result<Self> {
        let n = base.size();
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::IncompatibleKernel(format!(
                "kernel is {}x{}, shift has {n} states",
                p.nrows(),
                p.ncols()
            )));
        }
        let mut p = p;
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let x = p[(i, j)];
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(Error::IncompatibleKernel(format!(
                        "entry ({}, {}) = {x} is not a probability",
                        base.label(i),
                        base.label(j)
                    )));
                }
                if x > 0.0 && !base.allowed(i, j) {
                    return Err(Error::IncompatibleKernel(format!(
                        "positive mass on forbidden transition {}{}",
                        base.label(i),
                        base.label(j)
                    )));
                }
                sum += x;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::IncompatibleKernel(format!(
                    "row {} sums to {sum}",
                    base.label(i)
                )));
            }
            for j in 0..n {
                p[(i, j)] /= sum;
            }
        }
        let classes = closed_classes(&p);
        if classes.len() != 1 {
            return Err(Error::AmbiguousStationary(
                classes
                    .iter()
                    .map(|c| c.iter().map(|&i| base.label(i).to_string()).collect())
                    .collect(),
            ));
        }
        let class = &classes[0];
        let sol = linalg::stationary_on_class(&p, class)?;
        let mut pi = vec![0.0; n];
        for (&i, &v) in class.iter().zip(&sol) {
            pi[i] = v.max(0.0);
        }
        let total: f64 = pi.iter().sum();
        for x in pi.iter_mut() {
            *x /= total;
        }
        Ok(MarkovMeasure {
            base: base.clone(),
            p,
            pi,
        })
    }

    pub fn from_rows(base: &TransitionMatrix, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != base.size() || rows.iter().any(|r| r.len() != base.size()) {
            return Err(Error::IncompatibleKernel("kernel shape does not match shift".into()));
        }
        Self::new(base, linalg::matrix_from_rows(rows))
    }

    /// Assembles a measure whose stationarity is already known (Gibbs data).
    pub(crate) fn from_parts(base: &TransitionMatrix, p: DMatrix<f64>, pi: Vec<f64>) -> Self {
        MarkovMeasure {
            base: base.clone(),
            p,
            pi,
        }
    }

    /// Bernoulli measure on a full shift.
    pub fn bernoulli(base: &TransitionMatrix, weights: &[f64]) -> Result<Self> {
        let n = base.size();
        if weights.len() != n {
            return Err(Error::InvalidParameter("one weight per state".into()));
        }
        let total: f64 = weights.iter().sum();
        Self::new(base, DMatrix::from_fn(n, n, |_, j| weights[j] / total))
    }

    /// Point mass on the fixed point `s s s ...`.
    pub fn point_mass(base: &TransitionMatrix, s: usize) -> Result<Self> {
        if !base.allowed(s, s) {
            return Err(Error::InvalidParameter(format!(
                "{} is not a fixed point",
                base.label(s)
            )));
        }
        let n = base.size();
        Self::new(base, DMatrix::from_fn(n, n, |_, j| (j == s) as u8 as f64)).or_else(|_| {
            // other states may be unable to jump to s directly; send them along any edge
            let mut p = DMatrix::zeros(n, n);
            for i in 0..n {
                let j = if base.allowed(i, s) { s } else { base.successors(i)[0] };
                p[(i, j)] = 1.0;
            }
            Self::new(base, p)
        })
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// `mu([w]) = pi_{w_0} prod p_{w_i w_{i+1}}`.
    pub fn cylinder_mass(&self, symbols: &[usize]) -> f64 {
        let Some(&first) = symbols.first() else {
            return 1.0;
        };
        symbols
            .windows(2)
            .fold(self.pi[first], |m, w| m * self.p[(w[0], w[1])])
    }

    /// Visits every word of length `n` with positive mass, along with its mass.
    pub fn for_each_cylinder<F: FnMut(&[usize], f64)>(&self, n: usize, mut visit: F) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidParameter("cylinder length must be >= 1".into()));
        }
        let count = self.base.count_words(n);
        if count > DEFAULT_WORD_CAP {
            return Err(Error::ResourceLimit {
                requested: count,
                cap: DEFAULT_WORD_CAP,
            });
        }
        let mut word = Vec::with_capacity(n);
        for s in 0..self.base.size() {
            if self.pi[s] > 0.0 {
                word.push(s);
                self.descend(&mut word, self.pi[s], n, &mut visit);
                word.pop();
            }
        }
        Ok(())
    }

    fn descend<F: FnMut(&[usize], f64)>(&self, word: &mut Vec<usize>, mass: f64, n: usize, visit: &mut F) {
        if word.len() == n {
            visit(word, mass);
            return;
        }
        let last = word[word.len() - 1];
        for &next in self.base.successors(last) {
            let m = mass * self.p[(last, next)];
            if m > 0.0 {
                word.push(next);
                self.descend(word, m, n, visit);
                word.pop();
            }
        }
    }

    /// Kolmogorov–Sinai entropy `-sum_i pi_i sum_j p_ij log p_ij`.
    pub fn entropy_rate(&self) -> f64 {
        let n = self.base.size();
        -(0..n)
            .map(|i| self.pi[i] * (0..n).map(|j| xlogx(self.p[(i, j)])).sum::<f64>())
            .sum::<f64>()
    }

    /// `H(pi)`, the entropy of the one-symbol partition.
    pub fn marginal_entropy(&self) -> f64 {
        shannon_entropy(&self.pi)
    }

    /// Exact integral of a locally constant function.
    pub fn integrate(&self, f: &LocallyConstantFunction) -> Result<f64> {
        if f.base() != &self.base {
            return Err(Error::MismatchedShift);
        }
        let mut total = 0.0;
        self.for_each_cylinder(f.range(), |w, m| total += m * f.value(w))?;
        Ok(total)
    }

    /// `P_mu(phi) = h_mu + mu(phi)`.
    pub fn metric_pressure(&self, phi: &LocallyConstantFunction) -> Result<f64> {
        Ok(self.entropy_rate() + self.integrate(phi)?)
    }

    /// `H_mu(xi_0^{n-1})` by cylinder enumeration, cross-checked against
    /// `H(pi) + (n-1) h_mu`.
    pub fn block_entropy(&self, n: usize) -> Result<f64> {
        let mut h = 0.0;
        self.for_each_cylinder(n, |_, m| h -= xlogx(m))?;
        let closed = self.block_entropy_closed_form(n);
        if (h - closed).abs() > 1e-10 * closed.abs().max(1.0) {
            return Err(Error::Precondition(format!(
                "block entropy cross-check failed: enumeration {h}, closed form {closed}"
            )));
        }
        Ok(h)
    }

    /// `H(pi) + (n-1) h_mu`, exact for order-1 Markov measures.
    pub fn block_entropy_closed_form(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.marginal_entropy() + (n as f64 - 1.0) * self.entropy_rate()
    }

    /// Law of `x_0` given `x_1 = j`: `q(i|j) = pi_i p_ij / pi_j`.
    pub fn reverse_kernel(&self) -> ReverseKernel {
        let n = self.base.size();
        let q = DMatrix::from_fn(n, n, |i, j| {
            if self.pi[j] > 0.0 {
                self.pi[i] * self.p[(i, j)] / self.pi[j]
            } else {
                0.0
            }
        });
        ReverseKernel {
            q,
            defined: self.pi.iter().map(|&x| x > 0.0).collect(),
        }
    }

    /// `H(xi | xi_1^{n-1})`: `H(pi)` for `n = 1`, else the entropy of the
    /// reversed chain, which equals `h_mu` for every `n >= 2`.
    pub fn conditional_entropy(&self, n: usize) -> f64 {
        if n <= 1 {
            return self.marginal_entropy();
        }
        let rk = self.reverse_kernel();
        let size = self.base.size();
        -(0..size)
            .filter(|&j| rk.defined[j])
            .map(|j| self.pi[j] * (0..size).map(|i| xlogx(rk.q[(i, j)])).sum::<f64>())
            .sum::<f64>()
    }

    /// `I_mu(x_0, x_1) = -log q(x_0 | x_1)`; pairs outside the support map to +inf.
    pub fn information_function(&self, theta: f64) -> Result<InformationFunction> {
        let rk = self.reverse_kernel();
        let mut out_of_support = Vec::new();
        let function = LocallyConstantFunction::from_fn(&self.base, 2, theta, |w| {
            let q = rk.q[(w[0], w[1])];
            if q > 0.0 {
                -q.ln()
            } else {
                out_of_support.push((w[0], w[1]));
                f64::INFINITY
            }
        })?;
        Ok(InformationFunction {
            function,
            out_of_support,
        })
    }
}

/// `q(i|j)` stored at `(i, j)`; columns with `defined[j]` are probability vectors.
#[derive(Debug, Clone)]
pub struct ReverseKernel {
    pub q: DMatrix<f64>,
    pub defined: Vec<bool>,
}

impl ReverseKernel {
    pub fn given(&self, j: usize) -> Option<Vec<f64>> {
        self.defined[j].then(|| self.q.column(j).iter().copied().collect())
    }
}

#[derive(Debug, Clone)]
pub struct InformationFunction {
    pub function: LocallyConstantFunction,
    pub out_of_support: Vec<(usize, usize)>,
}

/// KL divergence; `value` is +inf when `q` is not absolutely continuous
/// with respect to `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub value: f64,
    pub support_violation: bool,
}

/// `D_p(q) = sum q_i log(q_i / p_i)`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<Divergence> {
    if p.len() != q.len() {
        return Err(Error::InvalidParameter("probability vectors differ in length".into()));
    }
    let mut value = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if qi > 0.0 {
            if pi <= 0.0 {
                return Ok(Divergence {
                    value: f64::INFINITY,
                    support_violation: true,
                });
            }
            value += qi * (qi / pi).ln();
        }
    }
    Ok(Divergence {
        value: value.max(0.0),
        support_violation: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerGap {
    pub l1: f64,
    pub bound: f64,
    pub support_violation: bool,
}

/// `(||q - p||_1, sqrt(2 D_p(q)))`.
pub fn pinsker_gap(p: &[f64], q: &[f64]) -> Result<PinskerGap> {
    let d = kl_divergence(p, q)?;
    let l1 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    Ok(PinskerGap {
        l1,
        bound: (2.0 * d.value).sqrt(),
        support_violation: d.support_violation,
    })
}

/// `sum_j mu(x_1 = j) D_{p(.|j)}(q(.|j))` with `p` the reverse kernel of `m`
/// and `q` that of `mu`.
pub fn conditional_kl_integral(m: &MarkovMeasure, mu: &MarkovMeasure) -> Result<Divergence> {
    if m.base() != mu.base() {
        return Err(Error::MismatchedShift);
    }
    let pm = m.reverse_kernel();
    let qm = mu.reverse_kernel();
    let mut total = 0.0;
    for j in 0..mu.base().size() {
        let weight = mu.stationary()[j];
        if weight <= 0.0 {
            continue;
        }
        let q = qm.given(j).expect("positive mass");
        let Some(p) = pm.given(j) else {
            return Ok(Divergence {
                value: f64::INFINITY,
                support_violation: true,
            });
        };
        let d = kl_divergence(&p, &q)?;
        if d.support_violation {
            return Ok(d);
        }
        total += weight * d.value;
    }
    Ok(Divergence {
        value: total,
        support_violation: false,
    })
}

// closed communicating classes of the support graph of p
fn closed_classes(p: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = p.nrows();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    if p[(u, v)] > 0.0 && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen
        })
        .collect();
    let mut classes = Vec::new();
    let mut assigned = vec![false; n];
    for s in 0..n {
        if assigned[s] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&t| reach[s][t] && reach[t][s]).collect();
        for &t in &class {
            assigned[t] = true;
        }
        let closed = (0..n).all(|t| !reach[s][t] || reach[t][s]);
        if closed {
            classes.push(class);
        }
    }
    classes
}
