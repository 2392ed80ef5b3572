//! Spectral density and block-Toeplitz autocovariance estimates from a
//! single sample path.

use nalgebra::{Complex, DMatrix};

use crate::error::{invalid, Result};
use crate::process::SamplePath;

/// Default number of frequencies on `[−π, π)`.
pub const DEFAULT_FREQ_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub freq_grid: Vec<f64>,
    /// Smallest eigenvalue of the estimated density at each frequency.
    pub min_eigs: Vec<f64>,
    /// Minimum of `min_eigs` over the grid.
    pub c_ell_sq_hat: f64,
}

/// Smallest eigenvalue of a Hermitian matrix through its real symmetric
/// embedding `[[A, −B], [B, A]]`, which doubles every eigenvalue's
/// multiplicity.
pub fn hermitian_min_eig(h: &DMatrix<Complex<f64>>) -> f64 {
    let n = h.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let v = h[(r, c)];
            m[(r, c)] = v.re;
            m[(r + n, c + n)] = v.re;
            m[(r, c + n)] = -v.im;
            m[(r + n, c)] = v.im;
        }
    }
    // symmetrize against rounding
    let m = (&m + m.transpose()) * 0.5;
    m.symmetric_eigen().eigenvalues.min()
}

/// Bartlett estimate: the path (all `n + p` stored states) is centered by its
/// global mean, cut into `n_segments` disjoint segments of equal length, and
/// the segment periodograms `d(ω) d(ω)ᴴ / L` are averaged.
pub fn psd_estimate(
    path: &SamplePath,
    n_segments: usize,
    freq_points: usize,
) -> Result<SpectralReport> {
    if n_segments == 0 || freq_points == 0 {
        return invalid("segments and frequency points must be positive");
    }
    let total = path.n_rows();
    if total < 4 * n_segments {
        return invalid(format!(
            "path of {total} states is too short for {n_segments} segments"
        ));
    }
    let nd = path.n_dims();
    let seg_len = total / n_segments;

    let mut mean = vec![0.0; nd];
    for r in 0..total {
        for (m, &b) in mean.iter_mut().zip(path.row(r)) {
            *m += b as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total as f64);

    let freq_grid: Vec<f64> = (0..freq_points)
        .map(|k| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / freq_points as f64)
        .collect();

    let steps: Vec<Complex<f64>> = freq_grid
        .iter()
        .map(|w| Complex::from_polar(1.0, -w))
        .collect();
    let mut acc = vec![DMatrix::<Complex<f64>>::zeros(nd, nd); freq_points];
    let mut d = vec![Complex::new(0.0, 0.0); freq_points * nd];
    let mut phase = vec![Complex::new(1.0, 0.0); freq_points];
    let mut centered = vec![0.0; nd];
    for seg in 0..n_segments {
        d.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
        for t in 0..seg_len {
            let row = path.row(seg * seg_len + t);
            for i in 0..nd {
                centered[i] = row[i] as f64 - mean[i];
            }
            // e^{−iωt} by rotation, resynchronized periodically
            for (k, ph) in phase.iter_mut().enumerate() {
                if t % 128 == 0 {
                    *ph = Complex::from_polar(1.0, -freq_grid[k] * t as f64);
                }
                let dk = &mut d[k * nd..(k + 1) * nd];
                for i in 0..nd {
                    dk[i] += *ph * centered[i];
                }
                *ph *= steps[k];
            }
        }
        for (k, a) in acc.iter_mut().enumerate() {
            let dk = &d[k * nd..(k + 1) * nd];
            for r in 0..nd {
                for c in 0..nd {
                    a[(r, c)] += dk[r] * dk[c].conj();
                }
            }
        }
    }
    let scale = 1.0 / (seg_len * n_segments) as f64;
    let min_eigs: Vec<f64> = acc
        .iter()
        .map(|a| hermitian_min_eig(&a.map(|v| v * scale)))
        .collect();
    let c_ell_sq_hat = min_eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SpectralReport {
        freq_grid,
        min_eigs,
        c_ell_sq_hat,
    })
}

/// Empirical block-Toeplitz autocovariance of depth `p`: block `(a, b)` is
/// the biased lag-`(b − a)` autocovariance of the mean-centered path.
pub fn autocovariance_matrix(path: &SamplePath) -> DMatrix<f64> {
    let (nd, p, total) = (path.n_dims(), path.n_lags(), path.n_rows());
    let mut mean = vec![0.0; nd];
    for r in 0..total {
        for (m, &b) in mean.iter_mut().zip(path.row(r)) {
            *m += b as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total as f64);
    let centered = DMatrix::from_fn(total, nd, |r, i| path.row(r)[i] as f64 - mean[i]);

    // gamma[h] = (1/T) Σ_t c_t c_{t+h}ᵀ
    let gammas: Vec<DMatrix<f64>> = (0..p)
        .map(|h| {
            let a = centered.rows(0, total - h);
            let b = centered.rows(h, total - h);
            a.transpose() * b / total as f64
        })
        .collect();
    let mut c = DMatrix::zeros(nd * p, nd * p);
    for a in 0..p {
        for b in 0..p {
            let block = if b >= a {
                gammas[b - a].clone()
            } else {
                gammas[a - b].transpose()
            };
            c.view_mut((a * nd, b * nd), (nd, nd)).copy_from(&block);
        }
    }
    c
}

/// Smallest eigenvalue of [`autocovariance_matrix`].
pub fn autocorr_min_eig(path: &SamplePath) -> f64 {
    let c = autocovariance_matrix(path);
    let c = (&c + c.transpose()) * 0.5;
    c.symmetric_eigen().eigenvalues.min().max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkSpec;
    use crate::process::simulate;
    use crate::tensor::ParamTensor;

    #[test]
    fn hermitian_embedding() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(2.0, 0.0),
                Complex::new(0.0, 1.0),
                Complex::new(0.0, -1.0),
                Complex::new(2.0, 0.0),
            ],
        );
        // eigenvalues 1 and 3
        assert!((hermitian_min_eig(&h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iid_spectrum_is_flat() {
        let path = simulate(
            &ParamTensor::square_zeros(2, 1),
            &LinkSpec::default(),
            40_000,
            0,
            3,
        )
        .unwrap();
        let rep = psd_estimate(&path, 400, 64).unwrap();
        assert_eq!(rep.freq_grid.len(), 64);
        assert_eq!(rep.freq_grid[0], -std::f64::consts::PI);
        assert!(rep.min_eigs.iter().all(|v| *v >= -1e-10));
        assert!(
            rep.c_ell_sq_hat > 0.18 && rep.c_ell_sq_hat < 0.26,
            "{}",
            rep.c_ell_sq_hat
        );
        let m = autocorr_min_eig(&path);
        assert!((m - 0.25).abs() < 0.01, "{m}");
    }

    #[test]
    fn self_excitation_lowers_the_floor() {
        let l = LinkSpec::default();
        let theta = ParamTensor::from_vec(1, 1, 1, vec![2.5]).unwrap();
        let path = simulate(&theta, &l, 100_000, 1000, 4).unwrap();
        let rep = psd_estimate(&path, 500, 128).unwrap();
        let c = autocovariance_matrix(&path);
        assert!(rep.c_ell_sq_hat < c[(0, 0)]);
    }

    #[test]
    fn depth_one_is_plain_covariance() {
        let path = simulate(
            &ParamTensor::square_zeros(3, 1),
            &LinkSpec::default(),
            500,
            0,
            5,
        )
        .unwrap();
        let c = autocovariance_matrix(&path);
        assert_eq!(c.shape(), (3, 3));
        let diag_expected: f64 = {
            let total = path.n_rows() as f64;
            let m = (0..path.n_rows())
                .map(|r| path.row(r)[0] as f64)
                .sum::<f64>()
                / total;
            (0..path.n_rows())
                .map(|r| (path.row(r)[0] as f64 - m).powi(2))
                .sum::<f64>()
                / total
        };
        assert!((c[(0, 0)] - diag_expected).abs() < 1e-12);
    }

    #[test]
    fn short_path_rejected() {
        let path = simulate(
            &ParamTensor::square_zeros(1, 1),
            &LinkSpec::default(),
            10,
            0,
            1,
        )
        .unwrap();
        assert!(psd_estimate(&path, 5, 16).is_err());
    }
}
