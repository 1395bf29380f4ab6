//! Singular-value engine for ω - H_nh: zero-mode census, exponential-splitting
//! fits and dynamical stability classification.

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Norm, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Result, TwpaError};
use crate::model::{build_dynamical_matrix, Boundary, DynamicalMatrix, ModelParams};

/// Default census threshold: below every bulk gap of interest, above deep
/// finite-size splittings at N = 50.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-2;
/// Numerical zero for Im(eigenvalue) in the stability test.
pub const STABILITY_EPSILON: f64 = 1e-9;

/// SVD of (ω - H_nh), values sorted ascending, with singular vectors as columns.
#[derive(Debug, Clone)]
pub struct SingularSpectrum {
    pub omega: f64,
    pub values: Array1<f64>,
    pub left_vectors: Array2<C64>,
    pub right_vectors: Array2<C64>,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub max_im_eigenvalue: f64,
    pub stable: bool,
    pub spectrum: Vec<C64>,
}

pub fn omega_minus_h(h: &Array2<C64>, omega: f64) -> Array2<C64> {
    let mut m = h.mapv(|z| -z);
    for j in 0..m.nrows() {
        m[[j, j]] += C64::new(omega, 0.0);
    }
    m
}

/// Full SVD of (ω - H_nh) with the reconstruction invariant verified
/// (relative Frobenius error < 1e-10).
pub fn singular_spectrum(h: &DynamicalMatrix, omega: f64) -> Result<SingularSpectrum> {
    let m = omega_minus_h(&h.entries, omega);
    singular_spectrum_of(&m, omega)
}

/// SVD of an arbitrary square complex matrix, ascending order.
pub fn singular_spectrum_of(m: &Array2<C64>, omega: f64) -> Result<SingularSpectrum> {
    let dim = m.nrows();
    let (u, s, vt) = m.svd(true, true)?;
    let u = u.ok_or_else(|| TwpaError::Backend("svd returned no left vectors".into()))?;
    let vt = vt.ok_or_else(|| TwpaError::Backend("svd returned no right vectors".into()))?;
    // LAPACK returns descending; re-key ascending.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| s[i].partial_cmp(&s[j]).unwrap());
    let values = Array1::from_iter(order.iter().map(|&i| s[i]));
    let mut left = Array2::<C64>::zeros((dim, dim));
    let mut right = Array2::<C64>::zeros((dim, dim));
    for (n, &i) in order.iter().enumerate() {
        left.column_mut(n).assign(&u.column(i));
        right
            .column_mut(n)
            .assign(&vt.row(i).mapv(|z| z.conj()));
    }
    // reconstruction invariant: m = sum_n u_n E_n v_n^dag
    let mut rec = Array2::<C64>::zeros((dim, dim));
    for n in 0..dim {
        let un = left.column(n);
        let vn = right.column(n);
        for r in 0..dim {
            for c in 0..dim {
                rec[[r, c]] += un[r] * values[n] * vn[c].conj();
            }
        }
    }
    let scale = m.norm().max(1e-300);
    let err = (&rec - m).norm() / scale;
    if err > 1e-10 {
        return Err(TwpaError::Backend(format!(
            "svd reconstruction error {err:.3e} > 1e-10"
        )));
    }
    Ok(SingularSpectrum {
        omega,
        values,
        left_vectors: left,
        right_vectors: right,
    })
}

/// Singular values only (ascending), without vectors — the fast path for sweeps.
pub fn singular_values(h: &DynamicalMatrix, omega: f64) -> Result<Array1<f64>> {
    let m = omega_minus_h(&h.entries, omega);
    let (_, s, _) = m.svd(false, false)?;
    let mut v: Vec<f64> = s.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(Array1::from(v))
}

/// Count singular values below `threshold`; `gap` is the smallest value at or
/// above it (infinite when none).
pub fn zero_mode_census(spec: &SingularSpectrum, threshold: f64) -> Result<(usize, f64)> {
    if threshold <= 0.0 {
        return Err(TwpaError::InvalidParameter(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    let count = spec.values.iter().filter(|&&v| v < threshold).count();
    let gap = spec
        .values
        .iter()
        .copied()
        .find(|&v| v >= threshold)
        .unwrap_or(f64::INFINITY);
    Ok((count, gap))
}

/// Ordinary least squares of log(smallest singular value) against N.
/// Non-positive values (at or below machine floor) are excluded.
pub fn splitting_decay_fit(
    params: &ModelParams,
    omega: f64,
    sizes: &[usize],
) -> Result<(f64, f64, f64)> {
    if sizes.len() < 4 {
        return Err(TwpaError::InvalidParameter(format!(
            "need at least 4 sizes for the fit, got {}",
            sizes.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in sizes {
        let h = build_dynamical_matrix(&params.with_n_sites(n), Boundary::Open, None)?;
        let s = singular_values(&h, omega)?;
        if s[0] > 1e-280 {
            xs.push(n as f64);
            ys.push(s[0].ln());
        }
    }
    if xs.len() < 3 {
        return Err(TwpaError::NonConvergence(
            "too few usable sizes after excluding underflowed singular values".into(),
        ));
    }
    Ok(ols(&xs, &ys))
}

/// Least-squares line y = slope*x + intercept; returns (slope, intercept, r2).
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

/// Eigenvalues of H_nh; stable iff max Im < `eps`.
pub fn stability_report_eps(h: &DynamicalMatrix, eps: f64) -> Result<StabilityReport> {
    let (vals, _) = h.entries.eig()?;
    let max_im = vals.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        max_im_eigenvalue: max_im,
        stable: max_im < eps,
        spectrum: vals.to_vec(),
    })
}

pub fn stability_report(h: &DynamicalMatrix) -> Result<StabilityReport> {
    stability_report_eps(h, STABILITY_EPSILON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_doubled_matrix, ModelParams};
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::Eigh;
    use ndarray_linalg::UPLO;

    fn dhn() -> ModelParams {
        ModelParams {
            g_s: 0.1,
            g_c: 0.1,
            pump: 0.75,
            ..ModelParams::canonical()
        }
    }

    #[test]
    fn zero_matrix_svd() {
        let p = ModelParams {
            n_sites: 3,
            ..ModelParams::canonical()
        };
        let h = DynamicalMatrix {
            entries: Array2::zeros((6, 6)),
            boundary: Boundary::Open,
            params: p,
            disorder: None,
        };
        let spec = singular_spectrum(&h, 2.0).unwrap();
        for &v in spec.values.iter() {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn canonical_single_zero_mode_n50() {
        let p = ModelParams::canonical().with_n_sites(50);
        let h = build_dynamical_matrix(&p, Boundary::Open, None).unwrap();
        let spec = singular_spectrum(&h, 0.0).unwrap();
        let (count, gap) = zero_mode_census(&spec, 1e-3).unwrap();
        assert_eq!(count, 1);
        assert!(gap > 1e-3);
        // gamma = 0: two degenerate pairs
        let h0 = build_dynamical_matrix(&p.with_gamma(0.0), Boundary::Open, None).unwrap();
        let s0 = singular_values(&h0, 0.0).unwrap();
        assert!(s0[1] < 1e-3 && s0[2] > 1e-3);
    }

    #[test]
    fn census_trivial_cases() {
        let p = ModelParams {
            n_sites: 4,
            ..ModelParams::canonical()
        };
        let h = DynamicalMatrix {
            entries: Array2::zeros((8, 8)),
            boundary: Boundary::Open,
            params: p,
            disorder: None,
        };
        let spec = singular_spectrum(&h, 1.0).unwrap();
        let (count, gap) = zero_mode_census(&spec, 1e-2).unwrap();
        assert_eq!(count, 0);
        assert_abs_diff_eq!(gap, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chiral_pairing_doubled_matrix() {
        let p = ModelParams {
            delta: 0.3,
            g_s: 0.8,
            g_c: 0.5,
            pump: 0.2,
            n_sites: 6,
            ..ModelParams::canonical()
        };
        let h = build_dynamical_matrix(&p, Boundary::Open, None).unwrap();
        let omega = 0.4;
        let spec = singular_spectrum(&h, omega).unwrap();
        let d = build_doubled_matrix(&h.entries, omega);
        let (evals, _) = d.eigh(UPLO::Lower).unwrap();
        // eigh ascending: positive half should equal singular values ascending
        let dim = 2 * p.n_sites;
        for n in 0..dim {
            let pos = evals[dim + n];
            let neg = -evals[dim - 1 - n];
            assert_abs_diff_eq!(pos, spec.values[n], epsilon = 1e-9);
            assert_abs_diff_eq!(neg, spec.values[n], epsilon = 1e-9);
        }
    }

    #[test]
    fn splitting_slopes() {
        let sizes = [6usize, 8, 10, 12];
        let (slope, _, r2) = splitting_decay_fit(&ModelParams::canonical(), 0.0, &sizes).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!(
            (slope + ln2).abs() < 0.2 * ln2,
            "slope {slope} not within 20% of -ln2"
        );
        assert!(r2 > 0.99);
        let g8 = ModelParams::canonical().with_gamma(8.0);
        let (s8, _, _) = splitting_decay_fit(&g8, 0.0, &sizes).unwrap();
        assert!(s8.abs() < 0.05, "trivial-phase slope {s8} should be flat");
    }

    #[test]
    fn stability_examples() {
        let can = ModelParams::canonical();
        let h = build_dynamical_matrix(&can, Boundary::Open, None).unwrap();
        assert!(stability_report(&h).unwrap().stable);
        let hp = build_dynamical_matrix(&can, Boundary::Periodic, None).unwrap();
        assert!(!stability_report(&hp).unwrap().stable);
        let h12 = build_dynamical_matrix(&dhn().with_n_sites(12), Boundary::Open, None).unwrap();
        assert!(stability_report(&h12).unwrap().stable);
        let h60 = build_dynamical_matrix(&dhn().with_n_sites(60), Boundary::Open, None).unwrap();
        assert!(!stability_report(&h60).unwrap().stable);
    }
}
