//! Winding invariants: W1(ω) via the trace formula (reduced 2x2 and doubled
//! 4x4 routes, asserted equal), band windings W±(ω) via eigenvalue-loop phase
//! accumulation, and 2D phase-diagram sweeps.

use ndarray::prelude::*;
use ndarray_linalg::Inverse;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TwpaError};
use crate::model::{
    bloch_derivative, bloch_matrix, build_dynamical_matrix, Boundary, ModelParams,
};
use crate::spectral::stability_report;

pub const DEFAULT_NK: usize = 1024;
const MAX_NK: usize = 1 << 20;
const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Continuously tracked Bloch eigenvalue loops E±(k) over one Brillouin zone.
#[derive(Debug, Clone)]
pub struct BandPath {
    pub k_grid: Vec<f64>,
    pub e_plus: Vec<C64>,
    pub e_minus: Vec<C64>,
    /// True when the square-root branch returns swapped after a full loop.
    pub swapped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Raw (unrounded) W1(ω) from the reduced trace formula
/// (1/2πi) ∮ dk tr[(ω - H(k))⁻¹ (-∂_k H(k))].
pub fn winding_trace(params: &ModelParams, omega: f64, n_k: usize) -> Result<f64> {
    if n_k < 64 {
        return Err(TwpaError::InvalidParameter(format!(
            "n_k must be >= 64, got {n_k}"
        )));
    }
    let dk = TAU / n_k as f64;
    let mut tot = C64::new(0.0, 0.0);
    for i in 0..n_k {
        let k = i as f64 * dk;
        let b = bloch_matrix(params, k);
        let m00 = C64::new(omega, 0.0) - b.matrix[[0, 0]];
        let m01 = -b.matrix[[0, 1]];
        let m10 = -b.matrix[[1, 0]];
        let m11 = C64::new(omega, 0.0) - b.matrix[[1, 1]];
        let det = m00 * m11 - m01 * m10;
        if det.norm() < 1e-14 {
            return Err(TwpaError::GapClosing {
                k,
                distance: det.norm().sqrt(),
            });
        }
        let dh = bloch_derivative(params, k);
        // tr[M⁻¹ (-dH)] with M⁻¹ = [[m11,-m01],[-m10,m00]]/det
        let tr = (m11 * (-dh[[0, 0]]) - m01 * (-dh[[1, 0]]) - m10 * (-dh[[0, 1]])
            + m00 * (-dh[[1, 1]]))
            / det;
        tot += tr;
    }
    Ok((tot * dk / (C64::new(0.0, TAU))).re)
}

/// Raw W1(ω) from the doubled-matrix route
/// (1/4πi) ∮ dk tr[τ_z ℋ(k,ω)⁻¹ ∂_k ℋ(k,ω)], τ_z = diag(-1,-1,+1,+1).
pub fn winding_trace_doubled(params: &ModelParams, omega: f64, n_k: usize) -> Result<f64> {
    if n_k < 64 {
        return Err(TwpaError::InvalidParameter(format!(
            "n_k must be >= 64, got {n_k}"
        )));
    }
    let dk = TAU / n_k as f64;
    let mut tot = C64::new(0.0, 0.0);
    for i in 0..n_k {
        let k = i as f64 * dk;
        let b = bloch_matrix(params, k);
        let dh = bloch_derivative(params, k);
        let mut hd = Array2::<C64>::zeros((4, 4));
        let mut dhd = Array2::<C64>::zeros((4, 4));
        for r in 0..2 {
            for c in 0..2 {
                let m = C64::new(if r == c { omega } else { 0.0 }, 0.0) - b.matrix[[r, c]];
                hd[[r, 2 + c]] = m;
                hd[[2 + c, r]] = m.conj();
                dhd[[r, 2 + c]] = -dh[[r, c]];
                dhd[[2 + c, r]] = -dh[[r, c]].conj();
            }
        }
        let hinv = hd
            .inv()
            .map_err(|_| TwpaError::GapClosing { k, distance: 0.0 })?;
        let prod = hinv.dot(&dhd);
        let tz = [-1.0, -1.0, 1.0, 1.0];
        for r in 0..4 {
            tot += tz[r] * prod[[r, r]];
        }
    }
    Ok((tot * dk / (C64::new(0.0, 2.0 * TAU))).re)
}

/// Trace-formula winding with adaptive grid doubling until the raw value is
/// within 1e-3 of an integer. Returns (raw, rounded). Both trace routes are
/// evaluated and must agree after rounding.
pub fn winding_trace_refined(
    params: &ModelParams,
    omega: f64,
    n_k_start: usize,
) -> Result<(f64, i64)> {
    let mut nk = n_k_start.max(64);
    loop {
        let raw = winding_trace(params, omega, nk)?;
        let rounded = raw.round();
        if (raw - rounded).abs() < 1e-3 {
            let doubled = winding_trace_doubled(params, omega, nk)?;
            if (doubled.round() - rounded).abs() > 0.5 {
                return Err(TwpaError::Backend(format!(
                    "trace routes disagree: reduced {raw:.6} vs doubled {doubled:.6}"
                )));
            }
            return Ok((raw, rounded as i64));
        }
        if nk >= MAX_NK {
            return Err(TwpaError::WindingRefinement((raw - rounded).abs()));
        }
        nk *= 2;
    }
}

/// E±(k) loops with square-root branch continuity enforced by first-order
/// prediction (the zeroth-order nearest-value rule fails at band touchings).
pub fn band_path(params: &ModelParams, omega: f64, n_k: usize) -> Result<BandPath> {
    if n_k < 64 {
        return Err(TwpaError::InvalidParameter(format!(
            "n_k must be >= 64, got {n_k}"
        )));
    }
    let _ = omega;
    let mut k_grid = Vec::with_capacity(n_k + 1);
    let mut f0s = Vec::with_capacity(n_k + 1);
    let mut ss: Vec<C64> = Vec::with_capacity(n_k + 1);
    for i in 0..=n_k {
        let k = TAU * i as f64 / n_k as f64;
        let b = bloch_matrix(params, k);
        let mut s = (b.fz * b.fz + b.fy * b.fy).sqrt();
        if i == 1 {
            if (s - ss[0]).norm() > (-s - ss[0]).norm() {
                s = -s;
            }
        } else if i > 1 {
            let pred = 2.0 * ss[i - 1] - ss[i - 2];
            if (s - pred).norm() > (-s - pred).norm() {
                s = -s;
            }
        }
        k_grid.push(k);
        f0s.push(b.f0);
        ss.push(s);
    }
    let swapped = (ss[n_k] - ss[0]).norm() > (ss[n_k] + ss[0]).norm();
    let e_plus: Vec<C64> = f0s.iter().zip(&ss).map(|(f, s)| f + s).collect();
    let e_minus: Vec<C64> = f0s.iter().zip(&ss).map(|(f, s)| f - s).collect();
    Ok(BandPath {
        k_grid,
        e_plus,
        e_minus,
        swapped,
    })
}

/// Accumulated arg increments of (ω - E_branch(k)) around the loop, over 2π.
/// Raw value; the caller rounds (or refines via [`winding_band`]).
pub fn winding_band_raw(path: &BandPath, omega: f64, branch: Branch) -> Result<f64> {
    let e = match branch {
        Branch::Plus => &path.e_plus,
        Branch::Minus => &path.e_minus,
    };
    let min_dist = e
        .iter()
        .map(|&z| (C64::new(omega, 0.0) - z).norm())
        .fold(f64::INFINITY, f64::min);
    if min_dist < 1e-8 {
        return Err(TwpaError::WindingRefinement(min_dist));
    }
    let mut acc = 0.0;
    for i in 1..e.len() {
        let z0 = C64::new(omega, 0.0) - e[i - 1];
        let z1 = C64::new(omega, 0.0) - e[i];
        acc += (z1 / z0).arg();
    }
    Ok(acc / TAU)
}

/// Integer band winding with adaptive refinement (grid doubling to 2^20).
pub fn winding_band(params: &ModelParams, omega: f64, branch: Branch, n_k: usize) -> Result<i64> {
    let (wp, wm, _) = band_windings(params, omega, n_k)?;
    Ok(match branch {
        Branch::Plus => wp,
        Branch::Minus => wm,
    })
}

/// Both band windings at once. When the loop closes swapped, the combined
/// doubled loop is wound and halved (flag returned).
pub fn band_windings(params: &ModelParams, omega: f64, n_k: usize) -> Result<(i64, i64, bool)> {
    let mut nk = n_k.max(64);
    let mut last_err;
    loop {
        let path = band_path(params, omega, nk)?;
        if path.swapped {
            // combined loop over 4π: E+ then E- (branches exchanged)
            let mut e = path.e_plus.clone();
            e.extend(path.e_minus.iter().copied());
            let combined = BandPath {
                k_grid: vec![],
                e_plus: e,
                e_minus: vec![],
                swapped: true,
            };
            let raw = winding_band_raw(&combined, omega, Branch::Plus)? / 2.0;
            let rounded = raw.round();
            if (raw - rounded).abs() < 1e-3 {
                return Ok((rounded as i64, rounded as i64, true));
            }
            last_err = (raw - rounded).abs();
        } else {
            let rp = winding_band_raw(&path, omega, Branch::Plus)?;
            let rm = winding_band_raw(&path, omega, Branch::Minus)?;
            if (rp - rp.round()).abs() < 1e-3 && (rm - rm.round()).abs() < 1e-3 {
                return Ok((rp.round() as i64, rm.round() as i64, false));
            }
            last_err = (rp - rp.round()).abs().max((rm - rm.round()).abs());
        }
        if nk >= MAX_NK {
            return Err(TwpaError::WindingRefinement(last_err));
        }
        nk *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Gamma,
    Pump,
    Omega,
    Delta,
}

impl SweepParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepParam::Gamma),
            "pump" => Ok(SweepParam::Pump),
            "omega" => Ok(SweepParam::Omega),
            "delta" => Ok(SweepParam::Delta),
            other => Err(TwpaError::Config(format!(
                "unknown sweep parameter '{other}' (expected gamma|pump|omega|delta)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Pump => "pump",
            SweepParam::Omega => "omega",
            SweepParam::Delta => "delta",
        }
    }

    pub fn apply(&self, params: &mut ModelParams, omega: &mut f64, value: f64) {
        match self {
            SweepParam::Gamma => params.gamma = value,
            SweepParam::Pump => params.pump = value,
            SweepParam::Omega => *omega = value,
            SweepParam::Delta => params.delta = value,
        }
    }
}

/// Uniform sweep `name:start:stop:count`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(TwpaError::Config(format!(
                "sweep spec '{s}' must be name:start:stop:count"
            )));
        }
        let param = SweepParam::parse(parts[0])?;
        let bad = |p: &str| TwpaError::Config(format!("bad number '{p}' in sweep spec '{s}'"));
        let start: f64 = parts[1].parse().map_err(|_| bad(parts[1]))?;
        let stop: f64 = parts[2].parse().map_err(|_| bad(parts[2]))?;
        let count: usize = parts[3].parse().map_err(|_| bad(parts[3]))?;
        if count < 1 {
            return Err(TwpaError::Config("sweep count must be >= 1".into()));
        }
        Ok(SweepSpec {
            param,
            start,
            stop,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| {
                self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
            })
            .collect()
    }
}

/// One grid point of a phase diagram; errors recorded as sentinels, never fatal.
#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub w1_raw: f64,
    pub w1: i64,
    pub w_plus: i64,
    pub w_minus: i64,
    pub stable: bool,
    pub max_im_eig: f64,
    pub error: Option<String>,
}

pub const WINDING_SENTINEL: i64 = i64::MIN;

#[derive(Debug, Clone)]
pub struct PhaseDiagramGrid {
    pub sweep_x: SweepSpec,
    pub sweep_y: SweepSpec,
    /// Row-major: index = iy * count_x + ix.
    pub points: Vec<PhasePoint>,
    pub n_errors: usize,
}

/// Sweep two parameters; per point compute W1 (both trace routes, rounded),
/// W± (band windings) and OBC stability at params.n_sites.
pub fn phase_diagram(
    params: &ModelParams,
    sweep_x: SweepSpec,
    sweep_y: SweepSpec,
    n_k: usize,
) -> Result<PhaseDiagramGrid> {
    params.validate()?;
    let xs = sweep_x.values();
    let ys = sweep_y.values();
    let coords: Vec<(f64, f64)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();
    let points: Vec<PhasePoint> = coords
        .par_iter()
        .map(|&(x, y)| {
            let mut p = *params;
            let mut omega = 0.0;
            sweep_x.param.apply(&mut p, &mut omega, x);
            sweep_y.param.apply(&mut p, &mut omega, y);
            evaluate_point(&p, omega, n_k, x, y)
        })
        .collect();
    let n_errors = points.iter().filter(|p| p.error.is_some()).count();
    Ok(PhaseDiagramGrid {
        sweep_x,
        sweep_y,
        points,
        n_errors,
    })
}

fn evaluate_point(params: &ModelParams, omega: f64, n_k: usize, x: f64, y: f64) -> PhasePoint {
    let winding = winding_trace_refined(params, omega, n_k)
        .and_then(|(raw, w1)| band_windings(params, omega, n_k).map(|(wp, wm, _)| (raw, w1, wp, wm)));
    let stability = build_dynamical_matrix(params, Boundary::Open, None)
        .and_then(|h| stability_report(&h));
    let (stable, max_im, stab_err) = match stability {
        Ok(r) => (r.stable, r.max_im_eigenvalue, None),
        Err(e) => (false, f64::NAN, Some(e.to_string())),
    };
    match winding {
        Ok((raw, w1, wp, wm)) => PhasePoint {
            x,
            y,
            w1_raw: raw,
            w1,
            w_plus: wp,
            w_minus: wm,
            stable,
            max_im_eig: max_im,
            error: stab_err,
        },
        Err(e) => PhasePoint {
            x,
            y,
            w1_raw: f64::NAN,
            w1: WINDING_SENTINEL,
            w_plus: WINDING_SENTINEL,
            w_minus: WINDING_SENTINEL,
            stable,
            max_im_eig: max_im,
            error: Some(e.to_string()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use approx::assert_abs_diff_eq;

    fn dhn() -> ModelParams {
        ModelParams {
            g_s: 0.1,
            g_c: 0.1,
            pump: 0.75,
            ..ModelParams::canonical()
        }
    }

    #[test]
    fn winding_frozen_points() {
        let can = ModelParams::canonical();
        let g1 = can.with_gamma(1.0);
        // (params, omega, w1, w_plus, w_minus)
        let cases = [
            (can, 0.0, 1i64, 1i64, 0i64),
            (g1, 0.0, 0, 1, -1),
            (g1, 1.6, 1, 1, 0),
            (g1, 3.0, 0, 0, 0),
            (dhn(), 0.0, 2, 1, 1),
        ];
        for (p, om, w1, wp, wm) in cases {
            let (raw, rounded) = winding_trace_refined(&p, om, 1024).unwrap();
            assert_eq!(rounded, w1, "W1 at gamma={} omega={om}", p.gamma);
            assert!((raw - w1 as f64).abs() < 1e-3);
            let (bp, bm, swap) = band_windings(&p, om, 1024).unwrap();
            assert_eq!((bp, bm), (wp, wm), "W± at gamma={} omega={om}", p.gamma);
            assert!(!swap);
            assert_eq!(bp + bm, w1, "Appendix-identity W1 = W+ + W-");
        }
    }

    #[test]
    fn trace_routes_agree_raw() {
        let p = ModelParams::canonical();
        let a = winding_trace(&p, 0.0, 2048).unwrap();
        let b = winding_trace_doubled(&p, 0.0, 2048).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn phi_zero_is_trivial() {
        let p = ModelParams {
            phi: 0.0,
            delta: 0.5,
            ..ModelParams::canonical()
        };
        let (_, w1) = winding_trace_refined(&p, 0.0, 1024).unwrap();
        assert_eq!(w1, 0);
    }

    #[test]
    fn omega_far_outside_loops() {
        let path = band_path(&ModelParams::canonical(), 100.0, 1024).unwrap();
        assert_abs_diff_eq!(
            winding_band_raw(&path, 100.0, Branch::Plus).unwrap(),
            0.0,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            winding_band_raw(&path, 100.0, Branch::Minus).unwrap(),
            0.0,
            epsilon = 1e-3
        );
    }

    #[test]
    fn band_path_matches_eigenvalues() {
        let p = ModelParams {
            delta: 0.3,
            g_s: 0.8,
            g_c: 0.5,
            pump: 0.2,
            ..ModelParams::canonical()
        };
        let path = band_path(&p, 0.0, 256).unwrap();
        for (i, &k) in path.k_grid.iter().enumerate() {
            let b = crate::model::bloch_matrix(&p, k);
            let tr = b.matrix[[0, 0]] + b.matrix[[1, 1]];
            let det = b.matrix[[0, 0]] * b.matrix[[1, 1]] - b.matrix[[0, 1]] * b.matrix[[1, 0]];
            let disc = (tr * tr - 4.0 * det).sqrt();
            let e1 = (tr + disc) / 2.0;
            let e2 = (tr - disc) / 2.0;
            let got = [path.e_plus[i], path.e_minus[i]];
            let direct = (got[0] - e1).norm() + (got[1] - e2).norm();
            let crossed = (got[0] - e2).norm() + (got[1] - e1).norm();
            assert!(direct.min(crossed) < 1e-10, "mismatch at k={k}");
        }
    }

    #[test]
    fn degenerate_sweep_single_point() {
        let p = ModelParams::canonical();
        let sx = SweepSpec::parse("gamma:4:4:1").unwrap();
        let sy = SweepSpec::parse("omega:0:0:1").unwrap();
        let grid = phase_diagram(&p, sx, sy, 256).unwrap();
        assert_eq!(grid.points.len(), 1);
        let pt = &grid.points[0];
        assert_eq!(pt.w1, 1);
        assert_eq!((pt.w_plus, pt.w_minus), (1, 0));
        assert!(pt.stable);
        assert!(pt.error.is_none());
    }

    #[test]
    fn sweep_spec_parsing() {
        let s = SweepSpec::parse("gamma:0:8:5").unwrap();
        assert_eq!(s.values(), vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert!(SweepSpec::parse("bogus:0:1:2").is_err());
        assert!(SweepSpec::parse("gamma:0:1").is_err());
    }
}
