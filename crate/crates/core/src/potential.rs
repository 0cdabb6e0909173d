//! Finite-range real functions on a shift.
//!
//! A [`LocallyConstantFunction`] of range `r` depends only on the first `r`
//! coordinates. It plays both roles: potential and observable.

use crate::error::{Error, Result};
use crate::shift::{BlockRecoding, TransitionMatrix, DEFAULT_WORD_CAP};

pub const DEFAULT_THETA: f64 = 0.5;

/// `(sup, lip, L)` with `L = sup + lip`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub sup: f64,
    pub lip: f64,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub struct LocallyConstantFunction {
    base: TransitionMatrix,
    range: usize,
    theta: f64,
    // dense over S^range, NaN on inadmissible words
    table: Vec<f64>,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("theta must lie in (0,1), got {theta}")))
    }
}

fn table_len(base: &TransitionMatrix, range: usize) -> Result<usize> {
    let n = base.size() as u128;
    let len = n.checked_pow(range as u32).unwrap_or(u128::MAX);
    if len > DEFAULT_WORD_CAP {
        return Err(Error::ResourceLimit {
            requested: len,
            cap: DEFAULT_WORD_CAP,
        });
    }
    Ok(len as usize)
}

impl LocallyConstantFunction {
    /// Tabulates `f` on every admissible word of length `range`.
    pub fn from_fn<F>(base: &TransitionMatrix, range: usize, theta: f64, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> f64,
    {
        if range == 0 {
            return Err(Error::InvalidParameter("range must be >= 1".into()));
        }
        check_theta(theta)?;
        let mut table = vec![f64::NAN; table_len(base, range)?];
        let n = base.size();
        base.for_each_word(range, DEFAULT_WORD_CAP, |w| {
            table[index_of(n, w)] = f(w);
        })?;
        Ok(LocallyConstantFunction {
            base: base.clone(),
            range,
            theta,
            table,
        })
    }

    /// Builds from explicit `(word, value)` pairs. Every admissible word must be
    /// covered unless `default` is given.
    pub fn from_entries(
        base: &TransitionMatrix,
        range: usize,
        theta: f64,
        entries: &[(Vec<usize>, f64)],
        default: Option<f64>,
    ) -> Result<Self> {
        let n = base.size();
        let mut given = std::collections::HashMap::new();
        for (w, v) in entries {
            if w.len() != range {
                return Err(Error::InvalidWord {
                    word: base.format_word(w),
                    reason: format!("expected length {range}"),
                });
            }
            if !base.is_admissible(w) {
                return Err(Error::InvalidWord {
                    word: base.format_word(w),
                    reason: "inadmissible transition".into(),
                });
            }
            given.insert(index_of(n, w), *v);
        }
        let mut missing = None;
        let f = Self::from_fn(base, range, theta, |w| match given.get(&index_of(n, w)) {
            Some(&v) => v,
            None => match default {
                Some(d) => d,
                None => {
                    missing.get_or_insert_with(|| base.format_word(w));
                    f64::NAN
                }
            },
        })?;
        if let Some(word) = missing {
            return Err(Error::InvalidWord {
                word,
                reason: "no table entry and no default".into(),
            });
        }
        Ok(f)
    }

    pub fn constant(base: &TransitionMatrix, c: f64) -> Self {
        Self::from_fn(base, 1, DEFAULT_THETA, |_| c).expect("range-1 table always fits")
    }

    pub fn zero(base: &TransitionMatrix) -> Self {
        Self::constant(base, 0.0)
    }

    /// Range-1 function from one value per state.
    pub fn from_state_values(base: &TransitionMatrix, theta: f64, values: &[f64]) -> Result<Self> {
        if values.len() != base.size() {
            return Err(Error::InvalidParameter(format!(
                "expected {} state values, got {}",
                base.size(),
                values.len()
            )));
        }
        Self::from_fn(base, 1, theta, |w| values[w[0]])
    }

    /// Indicator of the cylinder `[word]`; its range is the word length.
    pub fn indicator(base: &TransitionMatrix, word: &[usize]) -> Result<Self> {
        if !base.is_admissible(word) || word.is_empty() {
            return Err(Error::InvalidWord {
                word: base.format_word(word),
                reason: "not an admissible word".into(),
            });
        }
        Self::from_fn(base, word.len(), DEFAULT_THETA, |w| (w == word) as u8 as f64)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        self.theta = theta;
        Ok(self)
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Table value on the first `range` symbols; no admissibility check.
    #[inline]
    pub fn value(&self, symbols: &[usize]) -> f64 {
        self.table[index_of(self.base.size(), &symbols[..self.range])]
    }

    pub fn evaluate(&self, symbols: &[usize]) -> Result<f64> {
        if symbols.len() < self.range {
            return Err(Error::WordTooShort {
                len: symbols.len(),
                need: self.range,
            });
        }
        if !self.base.is_admissible(symbols) {
            return Err(Error::InvalidWord {
                word: self.base.format_word(symbols),
                reason: "inadmissible transition".into(),
            });
        }
        Ok(self.value(symbols))
    }

    /// Iterates over `(word, value)` for every admissible word of length `range`.
    pub fn entries(&self) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        self.base
            .for_each_word(self.range, DEFAULT_WORD_CAP, |w| out.push((w.to_vec(), self.value(w))))
            .expect("table size already checked");
        out
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.table.iter().copied().filter(|v| !v.is_nan())
    }

    /// `f + f∘T + ... + f∘T^(n-1)` along `symbols`. With `cyclic`, `symbols`
    /// has length `n` and stands for the periodic point it generates.
    pub fn birkhoff_sum(&self, symbols: &[usize], n: usize, cyclic: bool) -> Result<f64> {
        if cyclic {
            if symbols.len() != n || n == 0 {
                return Err(Error::InvalidParameter(format!(
                    "cyclic Birkhoff sum needs a word of length n = {n}, got {}",
                    symbols.len()
                )));
            }
            if !self.base.is_cyclically_admissible(symbols) {
                return Err(Error::InvalidWord {
                    word: self.base.format_word(symbols),
                    reason: "not cyclically admissible".into(),
                });
            }
            Ok(self.cyclic_sum_unchecked(symbols))
        } else {
            let need = n + self.range - 1;
            if symbols.len() < need {
                return Err(Error::WordTooShort {
                    len: symbols.len(),
                    need,
                });
            }
            if !self.base.is_admissible(symbols) {
                return Err(Error::InvalidWord {
                    word: self.base.format_word(symbols),
                    reason: "inadmissible transition".into(),
                });
            }
            Ok((0..n).map(|i| self.value(&symbols[i..])).sum())
        }
    }

    pub(crate) fn cyclic_sum_unchecked(&self, symbols: &[usize]) -> f64 {
        let k = symbols.len();
        let mut window = vec![0usize; self.range];
        (0..k)
            .map(|i| {
                for (t, slot) in window.iter_mut().enumerate() {
                    *slot = symbols[(i + t) % k];
                }
                self.value(&window)
            })
            .sum()
    }

    /// Value at the periodic point `w w w ...`.
    pub(crate) fn value_at_periodic(&self, symbols: &[usize]) -> f64 {
        let k = symbols.len();
        let window: Vec<usize> = (0..self.range).map(|t| symbols[t % k]).collect();
        self.value(&window)
    }

    /// `var_n`: the largest oscillation over admissible words agreeing on the
    /// first `n` symbols.
    pub fn variation(&self, n: usize) -> f64 {
        if n >= self.range {
            return 0.0;
        }
        let size = self.base.size();
        // words sharing an n-prefix occupy one contiguous block of the table
        let block = size.pow((self.range - n) as u32);
        self.table
            .chunks(block)
            .map(|chunk| {
                let (lo, hi) = chunk
                    .iter()
                    .filter(|v| !v.is_nan())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                if hi >= lo {
                    hi - lo
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// `C_n = 2 * sum_{k >= n} var_k`; a finite sum since `var_k = 0` for `k >= range`.
    pub fn tail_constant(&self, n: usize) -> f64 {
        2.0 * (n.max(1)..self.range).map(|k| self.variation(k)).sum::<f64>()
    }

    /// Hölder amplitude `max_k var_k / theta^k`, which certifies `var_n <= A theta^n`.
    pub fn holder_constant(&self) -> f64 {
        (1..self.range)
            .map(|k| self.variation(k) / self.theta.powi(k as i32))
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values().map(f64::abs).fold(0.0, f64::max)
    }

    pub fn norms(&self) -> Norms {
        let sup = self.sup_norm();
        let lip = self.holder_constant();
        Norms { sup, lip, l: sup + lip }
    }

    pub fn l_norm(&self) -> f64 {
        self.norms().l
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.base != other.base {
            return Err(Error::MismatchedShift);
        }
        if self.theta != other.theta {
            return Err(Error::ThetaMismatch(self.theta, other.theta));
        }
        Ok(())
    }

    fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_compatible(other)?;
        let range = self.range.max(other.range);
        Self::from_fn(&self.base, range, self.theta, |w| op(self.value(w), other.value(w)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `f + c`.
    pub fn shift_by(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for v in out.table.iter_mut().filter(|v| !v.is_nan()) {
            *v = op(*v);
        }
        out
    }

    /// `sup |f - g|` over admissible words.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Re-expresses the function with a larger range (same values).
    pub fn extend_range(&self, range: usize) -> Result<Self> {
        if range < self.range {
            return Err(Error::InvalidParameter(format!(
                "cannot shrink range {} to {range}",
                self.range
            )));
        }
        Self::from_fn(&self.base, range, self.theta, |w| self.value(w))
    }

    /// Transports the function through a block recoding of its base.
    ///
    /// The result has range `max(1, range + 2 - ell)` on the recoded shift and
    /// agrees with `f` composed with the conjugacy.
    pub fn pull_back(&self, recoding: &BlockRecoding) -> Result<Self> {
        if recoding.original() != &self.base {
            return Err(Error::MismatchedShift);
        }
        let new_range = (self.range + 1).saturating_sub(recoding.block_len()).max(1);
        Self::from_fn(recoding.recoded(), new_range, self.theta, |y| {
            self.value(&recoding.decode(y))
        })
    }

    /// Range-2 presentation on the `range`-block shift. Range <= 2 functions come
    /// back unchanged with no recoding.
    pub fn recode_to_markovian(&self) -> Result<MarkovianRecode> {
        if self.range <= 2 {
            return Ok(MarkovianRecode {
                recoding: None,
                function: self.clone(),
            });
        }
        let recoding = self.base.higher_block_recode(self.range)?;
        let function = self.pull_back(&recoding)?;
        debug_assert_eq!(function.range, 2);
        Ok(MarkovianRecode {
            recoding: Some(recoding),
            function,
        })
    }

    /// `f - P(f)`, whose pressure is zero.
    pub fn normalize_zero_pressure(&self) -> Result<Self> {
        let p = crate::transfer::pressure(self)?;
        Ok(self.shift_by(-p))
    }
}

#[derive(Debug, Clone)]
pub struct MarkovianRecode {
    pub recoding: Option<BlockRecoding>,
    pub function: LocallyConstantFunction,
}

#[inline]
fn index_of(n: usize, symbols: &[usize]) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * n + s)
}

/// Potentials available to configs by name.
pub fn builtin_potential(name: &str, base: &TransitionMatrix) -> Option<LocallyConstantFunction> {
    match name {
        "zero" => Some(LocallyConstantFunction::zero(base)),
        // phi(aa)=0, phi(ab)=1, phi(ba)=2, phi(bb)=3 on two symbols
        "var-example" if base.size() == 2 => Some(
            LocallyConstantFunction::from_fn(base, 2, DEFAULT_THETA, |w| (2 * w[0] + w[1]) as f64)
                .ok()?,
        ),
        other => {
            let args = other.strip_prefix("bernoulli(")?.strip_suffix(')')?;
            let weights: Vec<f64> = args
                .split(',')
                .map(|w| w.trim().parse::<f64>().ok().filter(|&w| w > 0.0))
                .collect::<Option<_>>()?;
            let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
            LocallyConstantFunction::from_state_values(base, DEFAULT_THETA, &logs).ok()
        }
    }
}

pub const BUILTIN_POTENTIALS: &[(&str, &str)] = &[
    ("zero", "phi = 0 (range 1)"),
    ("var-example", "range 2 on two symbols: phi(aa)=0, phi(ab)=1, phi(ba)=2, phi(bb)=3"),
    ("bernoulli(w1, ..., wk)", "range 1, phi(s) = log w_s"),
];
