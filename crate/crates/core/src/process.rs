//! Sample paths of the multivariate Bernoulli autoregressive process, the
//! lagged design matrix, and random sparse ground-truth tensors.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, MbpError, Result};
use crate::link::LinkSpec;
use crate::tensor::ParamTensor;

/// Default number of discarded warm-up steps.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Binary observations `x^{-p+1}, …, x^n` stored row-major, one row per time
/// step. Rows `0..p` are the initial history, rows `p..p+n` are `x^1..x^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePath {
    n: usize,
    n_dims: usize,
    n_lags: usize,
    data: Vec<u8>,
    seed: u64,
}

impl SamplePath {
    /// Builds a path from explicit rows (history first).
    pub fn from_rows(n_dims: usize, n_lags: usize, rows: &[Vec<u8>], seed: u64) -> Result<Self> {
        if n_dims == 0 || n_lags == 0 {
            return invalid("path dimensions must be positive");
        }
        if rows.len() <= n_lags {
            return invalid(format!(
                "need more than {n_lags} rows to hold the history plus one sample, got {}",
                rows.len()
            ));
        }
        let mut data = Vec::with_capacity(rows.len() * n_dims);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_dims {
                return invalid(format!(
                    "row {r} has {} entries, expected {n_dims}",
                    row.len()
                ));
            }
            if row.iter().any(|&b| b > 1) {
                return invalid(format!("row {r} contains a non-binary entry"));
            }
            data.extend_from_slice(row);
        }
        Ok(SamplePath {
            n: rows.len() - n_lags,
            n_dims,
            n_lags,
            data,
            seed,
        })
    }

    /// Number of regression samples.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn n_lags(&self) -> usize {
        self.n_lags
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total stored rows, `n + p`.
    pub fn n_rows(&self) -> usize {
        self.n + self.n_lags
    }

    /// Stored row `r` (0-based, history included).
    #[inline]
    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.n_dims..(r + 1) * self.n_dims]
    }

    /// `x^t` for `t ∈ [-p+1, n]`.
    #[inline]
    pub fn state(&self, t: isize) -> &[u8] {
        let r = t + self.n_lags as isize - 1;
        assert!(r >= 0, "time index {t} precedes the stored history");
        self.row(r as usize)
    }

    /// `X^{t-1}_{j l}` = `x^{t-l}_j` with `l` one-based, for `t ∈ [1, n]`.
    #[inline]
    pub fn lagged(&self, t: usize, j: usize, lag: usize) -> u8 {
        self.state(t as isize - lag as isize)[j]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn check_theta(&self, theta: &ParamTensor) -> Result<()> {
        if theta.shape() != (self.n_dims, self.n_dims, self.n_lags) {
            return Err(MbpError::ShapeMismatch(format!(
                "tensor {:?} does not match a path with N={} and p={}",
                theta.shape(),
                self.n_dims,
                self.n_lags
            )));
        }
        Ok(())
    }

    /// Text format: header `n N p seed`, then `n + p` lines of `N` bits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.n, self.n_dims, self.n_lags, self.seed);
        for r in 0..self.n_rows() {
            let line: Vec<&str> = self
                .row(r)
                .iter()
                .map(|&b| if b == 1 { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<SamplePath> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| MbpError::Parse("empty sample path file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(MbpError::Parse(format!(
                "sample path header needs `n N p seed`, got `{header}`"
            )));
        }
        let parse = |s: &str, name: &str| {
            s.parse::<u64>()
                .map_err(|e| MbpError::Parse(format!("bad header field {name}: {e}")))
        };
        let n = parse(fields[0], "n")? as usize;
        let n_dims = parse(fields[1], "N")? as usize;
        let n_lags = parse(fields[2], "p")? as usize;
        let seed = parse(fields[3], "seed")?;
        let rows = lines
            .map(|l| {
                l.split_whitespace()
                    .map(|b| match b {
                        "0" => Ok(0u8),
                        "1" => Ok(1u8),
                        other => Err(MbpError::Parse(format!("non-binary entry `{other}`"))),
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != n + n_lags {
            return Err(MbpError::Parse(format!(
                "header promises {} rows, found {}",
                n + n_lags,
                rows.len()
            )));
        }
        SamplePath::from_rows(n_dims, n_lags, &rows, seed)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<SamplePath> {
        SamplePath::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Rows `[(x^{t-1})ᵀ (x^{t-2})ᵀ … (x^{t-p})ᵀ]` for `t = 1..n`; column
/// `(l-1)·N + j` holds `x^{t-l}_j`, matching [`ParamTensor::stack`].
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub data: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn from_path(path: &SamplePath) -> DesignMatrix {
        let (n, nd, p) = (path.n(), path.n_dims(), path.n_lags());
        let data = DMatrix::from_fn(n, nd * p, |r, col| {
            let (lag, j) = (col / nd + 1, col % nd);
            path.lagged(r + 1, j, lag) as f64
        });
        DesignMatrix { data }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.data.column_iter().map(|c| c.norm()).collect()
    }
}

pub fn design_matrix(path: &SamplePath) -> DesignMatrix {
    DesignMatrix::from_path(path)
}

/// Linear predictors `⟨Θ_{i··}, X⟩` for a history given as `lag(l)` → state
/// `x^{t-l}` (one-based lag).
pub(crate) fn linear_predictors<'a>(
    theta: &ParamTensor,
    lag: impl Fn(usize) -> &'a [u8],
    out: &mut [f64],
) {
    let (nr, nc, p) = theta.shape();
    out.iter_mut().for_each(|v| *v = 0.0);
    for l in 0..p {
        let state = lag(l + 1);
        for (j, &x) in state.iter().enumerate().take(nc) {
            if x == 1 {
                for (i, o) in out.iter_mut().enumerate().take(nr) {
                    *o += theta.get(i, j, l);
                }
            }
        }
    }
}

/// Draws a sample path. The history starts i.i.d. Ber(1/2), the chain runs
/// `burn_in` discarded steps, then `n` recorded steps; the last `p` states
/// before the recorded steps form the stored history. Draws are consumed in
/// `(t, i)` order from a single ChaCha8 stream seeded with `seed`.
pub fn simulate(
    theta: &ParamTensor,
    link: &LinkSpec,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SamplePath> {
    if !theta.is_square() {
        return invalid(format!(
            "simulation needs a square tensor, got {:?}",
            theta.shape()
        ));
    }
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let (nd, _, p) = theta.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = p + burn_in + n;
    let mut buf = vec![0u8; total * nd];
    for b in buf[..p * nd].iter_mut() {
        *b = rng.random_bool(0.5) as u8;
    }
    let mut u = vec![0.0; nd];
    for r in p..total {
        {
            let (past, _) = buf.split_at(r * nd);
            linear_predictors(
                theta,
                |lag| &past[(r - lag) * nd..(r - lag + 1) * nd],
                &mut u,
            );
        }
        for i in 0..nd {
            let z = link.eval(u[i]);
            buf[r * nd + i] = (rng.random::<f64>() < z) as u8;
        }
    }
    let data = buf[burn_in * nd..].to_vec();
    Ok(SamplePath {
        n,
        n_dims: nd,
        n_lags: p,
        data,
        seed,
    })
}

/// Ground truth with exactly `s` nonzeros at uniformly random distinct
/// positions, magnitudes uniform on `[low, high]` and random signs.
pub fn random_sparse_theta(
    n_dims: usize,
    n_lags: usize,
    s: usize,
    magnitude_low: f64,
    magnitude_high: f64,
    seed: u64,
) -> Result<ParamTensor> {
    if n_dims == 0 || n_lags == 0 {
        return invalid("tensor dimensions must be positive");
    }
    let total = n_dims * n_dims * n_lags;
    if s > total {
        return invalid(format!("sparsity {s} exceeds N²p = {total}"));
    }
    if !(magnitude_low > 0.0 && magnitude_low <= magnitude_high && magnitude_high.is_finite()) {
        return invalid(format!(
            "need 0 < magnitude_low <= magnitude_high, got [{magnitude_low}, {magnitude_high}]"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = index::sample(&mut rng, total, s).into_vec();
    positions.sort_unstable();
    let mut values = vec![0.0; total];
    for k in positions {
        let mag = rng.random_range(magnitude_low..=magnitude_high);
        values[k] = if rng.random_bool(0.5) { mag } else { -mag };
    }
    ParamTensor::from_vec(n_dims, n_dims, n_lags, values)
}
