//! Effective-parameter maps for the two experimental driving schemes:
//! local-frequency modulation (Bessel sums) and multi-tone coupling modulation.

use num_complex::Complex64 as C64;

use crate::error::{Result, TwpaError};

/// J_n(x) for any integer order via libm, using J_{-n}(x) = (-1)^n J_n(x).
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let v = libm::jn(n.unsigned_abs() as i32, x);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LocalDriveSpec {
    /// Bare coupling J_c.
    pub j_c: f64,
    /// Drive strength η.
    pub eta: f64,
    /// Phase gradient Δφ.
    pub delta_phi: f64,
    /// Bessel truncation order.
    pub n_max: u32,
}

impl LocalDriveSpec {
    pub fn new(j_c: f64, eta: f64, delta_phi: f64) -> Self {
        LocalDriveSpec {
            j_c,
            eta,
            delta_phi,
            n_max: 40,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CouplingDriveSpec {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub phi_d: f64,
}

/// Effective coherent parameters produced by a drive map. `hop` can be
/// negative (sign absorbed by a gauge transformation downstream).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DriveMap {
    pub hop: f64,
    pub phi: f64,
    pub g_s: f64,
    pub g_c: f64,
}

fn tail_bound(eta: f64, n_max: u32) -> f64 {
    let n = n_max as i64;
    bessel_j(n, eta).abs() * bessel_j(n + 1, eta).abs()
        + bessel_j(n + 1, eta).abs().powi(2)
}

/// F(η, Δφ) = Σ_n J_{-n-1}(η) J_n(η) e^{-i(n+1/2)Δφ} — real-valued by the
/// n ↔ -n-1 pairing; the imaginary residue is asserted below 1e-12.
pub fn f_function(eta: f64, delta_phi: f64, n_max: u32) -> Result<f64> {
    if n_max < 1 {
        return Err(TwpaError::InvalidParameter("n_max must be >= 1".into()));
    }
    let tail = tail_bound(eta, n_max);
    if tail > 1e-15 {
        return Err(TwpaError::BesselTail(tail));
    }
    let mut sum = C64::new(0.0, 0.0);
    for n in -(n_max as i64)..=(n_max as i64) {
        let w = C64::from_polar(1.0, -(n as f64 + 0.5) * delta_phi);
        sum += bessel_j(-n - 1, eta) * bessel_j(n, eta) * w;
    }
    if sum.im.abs() > 1e-12 {
        return Err(TwpaError::ImaginaryResidue(sum.im.abs()));
    }
    Ok(sum.re)
}

/// Local-frequency drive: J = -J_c Σ_n J_n(η)² e^{-inΔφ} (real), φ = Δφ/2,
/// g_s = J_c J_{-1}(2η), g_c = -J_c F(η, Δφ). n_max grows automatically until
/// the truncation tail bound is met.
pub fn local_drive_map(spec: &LocalDriveSpec) -> Result<DriveMap> {
    if ![spec.j_c, spec.eta, spec.delta_phi].iter().all(|x| x.is_finite()) {
        return Err(TwpaError::InvalidParameter("non-finite drive spec".into()));
    }
    let mut n_max = spec.n_max.max(1);
    while tail_bound(spec.eta, n_max).max(tail_bound(2.0 * spec.eta, n_max)) > 1e-15 {
        n_max *= 2;
        if n_max > 1 << 16 {
            return Err(TwpaError::BesselTail(tail_bound(spec.eta, n_max)));
        }
    }
    let mut hop_sum = C64::new(0.0, 0.0);
    for n in -(n_max as i64)..=(n_max as i64) {
        let w = C64::from_polar(1.0, -(n as f64) * spec.delta_phi);
        hop_sum += bessel_j(n, spec.eta).powi(2) * w;
    }
    if hop_sum.im.abs() > 1e-12 {
        return Err(TwpaError::ImaginaryResidue(hop_sum.im.abs()));
    }
    let f = f_function(spec.eta, spec.delta_phi, n_max)?;
    Ok(DriveMap {
        hop: -spec.j_c * hop_sum.re,
        phi: spec.delta_phi / 2.0,
        g_s: spec.j_c * bessel_j(-1, 2.0 * spec.eta),
        g_c: -spec.j_c * f,
    })
}

/// Multi-tone coupling drive: J = A₃/2, φ = φ_d, g_s = A₁/2, g_c = A₂/2.
pub fn coupling_drive_map(spec: &CouplingDriveSpec) -> DriveMap {
    DriveMap {
        hop: spec.a3 / 2.0,
        phi: spec.phi_d,
        g_s: spec.a1 / 2.0,
        g_c: spec.a2 / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

    #[test]
    fn bessel_values() {
        assert_abs_diff_eq!(bessel_j(0, 0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bessel_j(1, 0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bessel_j(-1, 1.0), -0.44005058574493355, epsilon = 1e-13);
        // sum J_n(x)^2 = 1
        for &x in &[0.3, 1.7, 5.0] {
            let s: f64 = (-60i64..=60).map(|n| bessel_j(n, x).powi(2)).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn f_function_values() {
        assert_abs_diff_eq!(f_function(0.0, 1.3, 40).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            f_function(0.5, FRAC_PI_2, 40).unwrap(),
            -0.331911894130,
            epsilon = 1e-11
        );
        // symmetry in delta_phi
        for &(eta, dp) in &[(0.5, 0.7), (1.2, 2.0), (2.0, 3.0)] {
            assert_abs_diff_eq!(
                f_function(eta, dp, 60).unwrap(),
                f_function(eta, -dp, 60).unwrap(),
                epsilon = 1e-13
            );
        }
        // truncation stability
        assert_abs_diff_eq!(
            f_function(1.0, 1.0, 40).unwrap(),
            f_function(1.0, 1.0, 80).unwrap(),
            epsilon = 1e-12
        );
        assert!(matches!(
            f_function(5.0, 1.0, 4),
            Err(TwpaError::BesselTail(_))
        ));
    }

    #[test]
    fn local_map_limits() {
        // undriven: J = -J_c, parametric terms off
        let m = local_drive_map(&LocalDriveSpec::new(1.0, 0.0, 1.3)).unwrap();
        assert_abs_diff_eq!(m.hop, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.g_s, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.g_c, 0.0, epsilon = 1e-14);
        // delta_phi = 0: Bessel sum identity gives J = -J_c at any eta
        let m0 = local_drive_map(&LocalDriveSpec::new(1.0, 1.7, 0.0)).unwrap();
        assert_abs_diff_eq!(m0.hop, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn local_map_frozen_point() {
        let m = local_drive_map(&LocalDriveSpec::new(1.0, 0.5, FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(m.hop, -0.87885241827, epsilon = 1e-10);
        assert_abs_diff_eq!(m.phi, FRAC_PI_2 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.g_s, bessel_j(-1, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(m.g_c, 0.331911894130, epsilon = 1e-11);
        // eta = 0.9, dphi = pi: phi = pi/2 and g_s = J_c J_{-1}(1.8)
        let m2 = local_drive_map(&LocalDriveSpec::new(1.0, 0.9, std::f64::consts::PI)).unwrap();
        assert_abs_diff_eq!(m2.phi, FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(m2.g_s, bessel_j(-1, 1.8), epsilon = 1e-15);
    }

    #[test]
    fn coupling_map_canonical_round_trip() {
        let m = coupling_drive_map(&CouplingDriveSpec {
            a0: 0.0,
            a1: 2.0,
            a2: 2.0,
            a3: 2.0,
            phi_d: FRAC_PI_2,
        });
        assert_eq!(
            m,
            DriveMap {
                hop: 1.0,
                phi: FRAC_PI_2,
                g_s: 1.0,
                g_c: 1.0
            }
        );
        // feeding the map into the model reproduces the canonical matrix
        let p = crate::model::ModelParams {
            hop: m.hop,
            phi: m.phi,
            g_s: m.g_s,
            g_c: m.g_c,
            ..crate::model::ModelParams::canonical()
        };
        assert_eq!(p, crate::model::ModelParams::canonical());
        // W1 = 2 working point
        let m2 = coupling_drive_map(&CouplingDriveSpec {
            a0: 0.0,
            a1: 0.2,
            a2: 0.2,
            a3: 2.0,
            phi_d: FRAC_PI_2,
        });
        assert_abs_diff_eq!(m2.g_s, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m2.g_c, 0.1, epsilon = 1e-15);
    }
}
