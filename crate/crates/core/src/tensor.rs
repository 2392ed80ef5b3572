//! The N×N×p interaction tensor and the functionals defined on it.
//!
//! Indices are zero-based `(i, j, l)`: `i` is the receiving coordinate, `j` the
//! sending coordinate and `l` the lag minus one (so `l = 0` is lag 1). Storage
//! is dense and `i`-major, `l`-minor, which is also the order of the text file
//! format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{invalid, MbpError, Result};
use crate::link::LinkSpec;

/// Dense real tensor of shape `n_rows × n_cols × n_lags`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    n_rows: usize,
    n_cols: usize,
    n_lags: usize,
    values: Vec<f64>,
}

/// Entrywise tensor norms, collapsing dimensions from right to left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Sum of absolute entries.
    L111,
    /// Largest absolute entry.
    Max,
    /// Euclidean norm of all entries.
    Frobenius,
    /// Euclidean norm over `i` of the per-slice absolute sums.
    L211,
}

impl std::str::FromStr for NormKind {
    type Err = MbpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "111" => Ok(NormKind::L111),
            "inf" => Ok(NormKind::Max),
            "frob" => Ok(NormKind::Frobenius),
            "211" => Ok(NormKind::L211),
            other => invalid(format!("unknown norm kind `{other}`")),
        }
    }
}

impl ParamTensor {
    pub fn zeros(n_rows: usize, n_cols: usize, n_lags: usize) -> Self {
        assert!(
            n_rows > 0 && n_cols > 0 && n_lags > 0,
            "tensor dimensions must be positive"
        );
        ParamTensor {
            n_rows,
            n_cols,
            n_lags,
            values: vec![0.0; n_rows * n_cols * n_lags],
        }
    }

    /// Square `N × N × p` zero tensor.
    pub fn square_zeros(n_dims: usize, n_lags: usize) -> Self {
        Self::zeros(n_dims, n_dims, n_lags)
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, n_lags: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 || n_lags == 0 {
            return invalid("tensor dimensions must be positive");
        }
        if values.len() != n_rows * n_cols * n_lags {
            return invalid(format!(
                "expected {} values for a {n_rows}x{n_cols}x{n_lags} tensor, got {}",
                n_rows * n_cols * n_lags,
                values.len()
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite tensor entry at flat index {pos}"));
        }
        Ok(ParamTensor {
            n_rows,
            n_cols,
            n_lags,
            values,
        })
    }

    /// Builds a tensor by evaluating `f(i, j, l)` at every index.
    pub fn from_fn(
        n_rows: usize,
        n_cols: usize,
        n_lags: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(n_rows * n_cols * n_lags);
        for i in 0..n_rows {
            for j in 0..n_cols {
                for l in 0..n_lags {
                    values.push(f(i, j, l));
                }
            }
        }
        Self::from_vec(n_rows, n_cols, n_lags, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_lags(&self) -> usize {
        self.n_lags
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_rows, self.n_cols, self.n_lags)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn flat_index(&self, i: usize, j: usize, l: usize) -> usize {
        debug_assert!(i < self.n_rows && j < self.n_cols && l < self.n_lags);
        (i * self.n_cols + j) * self.n_lags + l
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn unflatten(&self, flat: usize) -> (usize, usize, usize) {
        let l = flat % self.n_lags;
        let ij = flat / self.n_lags;
        (ij / self.n_cols, ij % self.n_cols, l)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.values[self.flat_index(i, j, l)]
    }

    /// Sets one entry. Panics on a non-finite value.
    pub fn set(&mut self, i: usize, j: usize, l: usize, value: f64) {
        assert!(value.is_finite(), "tensor entries must be finite");
        let idx = self.flat_index(i, j, l);
        self.values[idx] = value;
    }

    /// Length-p filter `Θ_{ij·}`.
    pub fn fiber(&self, i: usize, j: usize) -> &[f64] {
        let start = self.flat_index(i, j, 0);
        &self.values[start..start + self.n_lags]
    }

    /// Slice `Θ_{i··}` flattened in `(j, l)` order.
    pub fn row_slice(&self, i: usize) -> &[f64] {
        let width = self.n_cols * self.n_lags;
        &self.values[i * width..(i + 1) * width]
    }

    pub fn same_shape(&self, other: &ParamTensor) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn check_same_shape(&self, other: &ParamTensor, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(MbpError::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    pub fn scaled(&self, c: f64) -> ParamTensor {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ParamTensor {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        assert!(
            values.iter().all(|v| v.is_finite()),
            "map produced a non-finite entry"
        );
        ParamTensor { values, ..*self }
    }

    /// Entrywise `self + c·other`.
    pub fn axpy(&self, c: f64, other: &ParamTensor) -> Result<ParamTensor> {
        self.check_same_shape(other, "axpy")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        ParamTensor::from_vec(self.n_rows, self.n_cols, self.n_lags, values)
    }

    pub fn add(&self, other: &ParamTensor) -> Result<ParamTensor> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &ParamTensor) -> Result<ParamTensor> {
        self.axpy(-1.0, other)
    }

    /// Euclidean inner product of the flattened tensors.
    pub fn inner(&self, other: &ParamTensor) -> Result<f64> {
        self.check_same_shape(other, "inner product")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Support as zero-based index triples, in lexicographic order.
    pub fn support(&self) -> Vec<(usize, usize, usize)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, _)| self.unflatten(k))
            .collect()
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L111 => self.values.iter().map(|v| v.abs()).sum(),
            NormKind::Max => self.values.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormKind::Frobenius => self.values.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormKind::L211 => (0..self.n_rows)
                .map(|i| {
                    let s: f64 = self.row_slice(i).iter().map(|v| v.abs()).sum();
                    s * s
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Stacks the lag slices side by side into an `N × (N·p)` matrix
    /// `[Θ_{··1} Θ_{··2} … Θ_{··p}]`; column `l·N + j` holds `Θ_{·jl}`.
    pub fn stack(&self) -> DMatrix<f64> {
        let (nr, nc, p) = self.shape();
        DMatrix::from_fn(nr, nc * p, |i, col| self.get(i, col % nc, col / nc))
    }

    /// Inverse of [`stack`](Self::stack).
    pub fn unstack(m: &DMatrix<f64>, n_lags: usize) -> Result<ParamTensor> {
        if n_lags == 0 || !m.ncols().is_multiple_of(n_lags) {
            return invalid(format!(
                "cannot unstack a {}x{} matrix into {n_lags} lags",
                m.nrows(),
                m.ncols()
            ));
        }
        let nc = m.ncols() / n_lags;
        ParamTensor::from_fn(m.nrows(), nc, n_lags, |i, j, l| m[(i, l * nc + j)])
    }

    /// Serializes to the text format: a header line `N_rows N_cols p`
    /// followed by the entries in `(i, j, l)` order, one fiber per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n_rows, self.n_cols, self.n_lags);
        for fiber in self.values.chunks(self.n_lags) {
            let line: Vec<String> = fiber.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ParamTensor> {
        let mut tokens = text.split_whitespace();
        let mut dim = |name: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| MbpError::Parse(format!("missing header field {name}")))?
                .parse::<usize>()
                .map_err(|e| MbpError::Parse(format!("bad header field {name}: {e}")))
        };
        let (nr, nc, p) = (dim("N_rows")?, dim("N_cols")?, dim("p")?);
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| MbpError::Parse(format!("bad tensor entry `{t}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        ParamTensor::from_vec(nr, nc, p, values)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<ParamTensor> {
        ParamTensor::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Best `s`-term approximation summary of a tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityReport {
    pub s: usize,
    /// Zero-based `(i, j, l)` triples of the kept entries, largest first.
    pub support: Vec<(usize, usize, usize)>,
    /// ℓ1 mass outside `support`.
    pub sigma_s: f64,
    /// `sigma_s² / s`, reported as 0 for `s = 0`.
    pub tau_s_sq: f64,
    /// `tau_s_sq + sigma_s`.
    pub tau_tilde_sq: f64,
}

/// Flat indices ordered by decreasing magnitude, ties broken by lexicographic
/// index order.
pub(crate) fn magnitude_order(t: &ParamTensor) -> Vec<usize> {
    let mut order: Vec<usize> = (0..t.len()).collect();
    // Stable sort keeps lexicographic order among equal magnitudes.
    order.sort_by(|&a, &b| t.values[b].abs().total_cmp(&t.values[a].abs()));
    order
}

/// Greedy best `s`-term approximation in the ℓ1 sense. Keeping the `s`
/// largest magnitudes minimizes the residual ℓ1 mass.
pub fn sparse_approx(t: &ParamTensor, s: usize) -> Result<SparsityReport> {
    if s > t.len() {
        return invalid(format!(
            "support budget {s} exceeds tensor size {}",
            t.len()
        ));
    }
    let order = magnitude_order(t);
    let sigma_s: f64 = order[s..].iter().map(|&k| t.values[k].abs()).sum();
    let support = order[..s].iter().map(|&k| t.unflatten(k)).collect();
    let tau_s_sq = if s == 0 {
        0.0
    } else {
        sigma_s * sigma_s / s as f64
    };
    Ok(SparsityReport {
        s,
        support,
        sigma_s,
        tau_s_sq,
        tau_tilde_sq: tau_s_sq + sigma_s,
    })
}

/// The bracketed sum inside the mixing norm, without the link prefactor:
/// `sqrt( Σ_l Σ_i ( Σ_j Σ_{k ≥ l} |t_ijk| )² )`.
pub fn mixing_inner_norm(t: &ParamTensor) -> f64 {
    let (nr, nc, p) = t.shape();
    let mut total = 0.0;
    let mut tails = vec![0.0; p];
    for i in 0..nr {
        tails.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..nc {
            let fiber = t.fiber(i, j);
            // suffix sums over lags k >= l
            let mut acc = 0.0;
            for l in (0..p).rev() {
                acc += fiber[l].abs();
                tails[l] += acc;
            }
        }
        total += tails.iter().map(|v| v * v).sum::<f64>();
    }
    total.sqrt()
}

/// Mixing norm `g_f`: `sqrt(3 L_f² / (2ε)) · mixing_inner_norm(t)`.
pub fn mixing_norm(t: &ParamTensor, link: &LinkSpec) -> f64 {
    let lf = link.lipschitz();
    (3.0 * lf * lf / (2.0 * link.eps())).sqrt() * mixing_inner_norm(t)
}

/// The concentration constant `G_f`, or a divergence marker when the mixing
/// norm is at least one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConcentrationConstant {
    Finite(f64),
    Diverged,
}

impl ConcentrationConstant {
    pub fn value(&self) -> Option<f64> {
        match self {
            ConcentrationConstant::Finite(v) => Some(*v),
            ConcentrationConstant::Diverged => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, ConcentrationConstant::Diverged)
    }
}

/// `G_f = 8 c_f² [1 + p² / (1/g_f − 1)²]` evaluated from a mixing-norm value.
pub fn concentration_constant_from(gf: f64, c_f: f64, n_lags: usize) -> ConcentrationConstant {
    if !(gf < 1.0) {
        return ConcentrationConstant::Diverged;
    }
    let base = 8.0 * c_f * c_f;
    if gf == 0.0 {
        return ConcentrationConstant::Finite(base);
    }
    let p = n_lags as f64;
    let gap = 1.0 / gf - 1.0;
    ConcentrationConstant::Finite(base * (1.0 + p * p / (gap * gap)))
}

pub fn concentration_constant(t: &ParamTensor, link: &LinkSpec) -> ConcentrationConstant {
    concentration_constant_from(mixing_norm(t, link), link.curvature(), t.n_lags())
}
