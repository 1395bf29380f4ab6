//! Model construction: dynamical matrix, pump matrix, Bloch form, doubled matrix.
//!
//! Conventions (all energies in units of the hopping J):
//! * Nambu ordering `(a_0 .. a_{N-1}, a_0^† .. a_{N-1}^†)`, so the 2N x 2N
//!   dynamical matrix has the block form `[[A + iΓ, K], [-K*, -A* + iΓ]]`.
//! * Coherent hopping carries `J e^{+iφ}` on the subdiagonal (`A[j+1, j]`),
//!   which makes the amplification direction run from site 0 towards site N-1
//!   at the canonical working point `φ = π/2`.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TwpaError};

pub const I: C64 = C64::new(0.0, 1.0);

/// Physical parameter set of one array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Local mode energy Δ.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Hopping J (the unit of energy).
    #[serde(default = "default_hop")]
    pub hop: f64,
    /// Hopping phase φ.
    #[serde(default = "default_phi")]
    pub phi: f64,
    /// Single-mode parametric strength g_s.
    #[serde(default = "default_g")]
    pub g_s: f64,
    /// Two-mode parametric strength g_c.
    #[serde(default = "default_g")]
    pub g_c: f64,
    /// Local loss rate γ.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Collective incoherent pump rate P.
    #[serde(default = "default_pump")]
    pub pump: f64,
    /// Number of sites N.
    #[serde(default = "default_n_sites")]
    pub n_sites: usize,
}

fn default_delta() -> f64 {
    0.0
}
fn default_hop() -> f64 {
    1.0
}
fn default_phi() -> f64 {
    std::f64::consts::FRAC_PI_2
}
fn default_g() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    4.0
}
fn default_pump() -> f64 {
    0.0
}
fn default_n_sites() -> usize {
    12
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::canonical()
    }
}

impl ModelParams {
    /// The canonical working point: Δ=0, J=1, φ=π/2, g_s=g_c=1, γ=4, P=0, N=12.
    pub fn canonical() -> Self {
        ModelParams {
            delta: 0.0,
            hop: 1.0,
            phi: std::f64::consts::FRAC_PI_2,
            g_s: 1.0,
            g_c: 1.0,
            gamma: 4.0,
            pump: 0.0,
            n_sites: 12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.delta, self.hop, self.phi, self.g_s, self.g_c, self.gamma, self.pump,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(TwpaError::InvalidParameter("non-finite parameter".into()));
        }
        if self.hop <= 0.0 {
            return Err(TwpaError::InvalidParameter(format!(
                "hop must be > 0, got {}",
                self.hop
            )));
        }
        if self.gamma < 0.0 || self.pump < 0.0 {
            return Err(TwpaError::InvalidParameter(
                "gamma and pump must be >= 0".into(),
            ));
        }
        if self.n_sites < 2 {
            return Err(TwpaError::InvalidParameter(format!(
                "n_sites must be >= 2, got {}",
                self.n_sites
            )));
        }
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_n_sites(mut self, n: usize) -> Self {
        self.n_sites = n;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::Open
    }
}

/// JSON configuration: model parameters plus boundary, with canonical defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub params: ModelParams,
    #[serde(default)]
    pub boundary: Boundary,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            params: ModelParams::canonical(),
            boundary: Boundary::Open,
        }
    }
}

/// One realization of on-site disorder, reproducible from its key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderOffsets {
    pub offsets: Vec<f64>,
    pub seed: u64,
    pub realization_index: u32,
    pub strength: f64,
}

/// The 2N x 2N non-Hermitian dynamical matrix together with its provenance.
#[derive(Debug, Clone)]
pub struct DynamicalMatrix {
    pub entries: Array2<C64>,
    pub boundary: Boundary,
    pub params: ModelParams,
    pub disorder: Option<DisorderOffsets>,
}

impl DynamicalMatrix {
    pub fn n_sites(&self) -> usize {
        self.params.n_sites
    }
}

/// Build the dynamical matrix H_nh.
///
/// Blocks: `A_{j,l} = (Δ + w_j) δ_{j,l} + J e^{+iφ} δ_{j,l+1} + J e^{-iφ} δ_{j,l-1}`,
/// `Γ_{j,l} = ((4P-γ)/2) δ_{j,l} + P δ_{j,l±1}`, `K_{j,l} = g_s δ_{j,l} + g_c δ_{j,l±1}`,
/// assembled as `[[A + iΓ, K], [-K, -A* + iΓ]]` (K is real). Periodic boundaries
/// wrap all three couplings with the same orientation as the bulk pattern.
pub fn build_dynamical_matrix(
    params: &ModelParams,
    boundary: Boundary,
    disorder: Option<&DisorderOffsets>,
) -> Result<DynamicalMatrix> {
    params.validate()?;
    let n = params.n_sites;
    if let Some(d) = disorder {
        if d.offsets.len() != n {
            return Err(TwpaError::DimensionMismatch(format!(
                "disorder has {} offsets for {} sites",
                d.offsets.len(),
                n
            )));
        }
    }

    let mut a = Array2::<C64>::zeros((n, n));
    let mut g = Array2::<f64>::zeros((n, n));
    let mut k = Array2::<f64>::zeros((n, n));
    let hop_fwd = C64::from_polar(params.hop, params.phi);
    let hop_bwd = hop_fwd.conj();

    for j in 0..n {
        let w = disorder.map_or(0.0, |d| d.offsets[j]);
        a[[j, j]] = C64::new(params.delta + w, 0.0);
        g[[j, j]] = (4.0 * params.pump - params.gamma) / 2.0;
        k[[j, j]] = params.g_s;
    }
    let mut bonds: Vec<(usize, usize)> = (0..n - 1).map(|j| (j + 1, j)).collect();
    if boundary == Boundary::Periodic {
        bonds.push((0, n - 1));
    }
    for (hi, lo) in bonds {
        a[[hi, lo]] = hop_fwd;
        a[[lo, hi]] = hop_bwd;
        g[[hi, lo]] = params.pump;
        g[[lo, hi]] = params.pump;
        k[[hi, lo]] = params.g_c;
        k[[lo, hi]] = params.g_c;
    }

    let mut h = Array2::<C64>::zeros((2 * n, 2 * n));
    for j in 0..n {
        for l in 0..n {
            let gc = C64::new(0.0, g[[j, l]]);
            h[[j, l]] = a[[j, l]] + gc;
            h[[j, n + l]] = C64::new(k[[j, l]], 0.0);
            h[[n + j, l]] = C64::new(-k[[j, l]], 0.0);
            h[[n + j, n + l]] = -a[[j, l]].conj() + gc;
        }
    }

    Ok(DynamicalMatrix {
        entries: h,
        boundary,
        params: *params,
        disorder: disorder.cloned(),
    })
}

/// Pump matrix P_{j,l} = 2P (2 δ_{j,l} + δ_{j,l+1} + δ_{j,l-1}).
pub fn build_pump_matrix(params: &ModelParams, boundary: Boundary) -> Array2<f64> {
    let n = params.n_sites;
    let p = params.pump;
    let mut m = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        m[[j, j]] = 4.0 * p;
    }
    for j in 0..n - 1 {
        m[[j + 1, j]] = 2.0 * p;
        m[[j, j + 1]] = 2.0 * p;
    }
    if boundary == Boundary::Periodic {
        m[[0, n - 1]] = 2.0 * p;
        m[[n - 1, 0]] = 2.0 * p;
    }
    m
}

/// Eigendecomposition of the pump matrix: P_{j,l} = Σ_m rates_m R_{m,j} R_{m,l}
/// with rows of `rotation` the eigenvectors and `rates` sorted descending.
#[derive(Debug, Clone)]
pub struct PumpDecomposition {
    pub rates: Vec<f64>,
    /// Row m is the eigenvector belonging to rates[m].
    pub rotation: Array2<f64>,
    /// Set when any rate < -1e-10 (flagged, not fatal).
    pub negative_rates: bool,
}

pub fn pump_decomposition(pump_matrix: &Array2<f64>) -> Result<PumpDecomposition> {
    let n = pump_matrix.nrows();
    if pump_matrix.ncols() != n {
        return Err(TwpaError::DimensionMismatch("pump matrix not square".into()));
    }
    let (vals, vecs) = pump_matrix.eigh(UPLO::Lower)?;
    // eigh returns ascending eigenvalues with eigenvectors in columns
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let rates: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut rotation = Array2::<f64>::zeros((n, n));
    for (m, &i) in order.iter().enumerate() {
        rotation.row_mut(m).assign(&vecs.column(i));
    }
    // reconstruction guard
    let mut err = 0.0_f64;
    for j in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for m in 0..n {
                s += rates[m] * rotation[[m, j]] * rotation[[m, l]];
            }
            err = err.max((s - pump_matrix[[j, l]]).abs());
        }
    }
    if err > 1e-12 {
        return Err(TwpaError::Backend(format!(
            "pump decomposition reconstruction error {err:.3e} > 1e-12"
        )));
    }
    let negative_rates = rates.iter().any(|&r| r < -1e-10);
    Ok(PumpDecomposition {
        rates,
        rotation,
        negative_rates,
    })
}

/// Bloch-space 2x2 matrix and its Pauli coefficients.
#[derive(Debug, Clone)]
pub struct BlochMatrix {
    pub k: f64,
    pub f0: C64,
    pub fx: C64,
    pub fy: C64,
    pub fz: C64,
    pub matrix: Array2<C64>,
}

/// H(k) = f0 I + fy σ_y + fz σ_z with
/// f0 = -2J sin k sin φ - iγ/2 + 4iP cos²(k/2),
/// fy = i (g_s + 2 g_c cos k), fz = Δ + 2J cos k cos φ.
pub fn bloch_matrix(params: &ModelParams, k: f64) -> BlochMatrix {
    let (j, phi) = (params.hop, params.phi);
    let f0 = C64::new(
        -2.0 * j * k.sin() * phi.sin(),
        -params.gamma / 2.0 + 4.0 * params.pump * (k / 2.0).cos().powi(2),
    );
    let fy = I * (params.g_s + 2.0 * params.g_c * k.cos());
    let fz = C64::new(params.delta + 2.0 * j * k.cos() * phi.cos(), 0.0);
    BlochMatrix {
        k,
        f0,
        fx: C64::new(0.0, 0.0),
        fy,
        fz,
        matrix: pauli_assemble(f0, fy, fz),
    }
}

/// Analytic d/dk of the Bloch matrix.
pub fn bloch_derivative(params: &ModelParams, k: f64) -> Array2<C64> {
    let (j, phi) = (params.hop, params.phi);
    let f0p = C64::new(
        -2.0 * j * k.cos() * phi.sin(),
        -2.0 * params.pump * k.sin(),
    );
    let fyp = I * (-2.0 * params.g_c * k.sin());
    let fzp = C64::new(-2.0 * j * k.sin() * phi.cos(), 0.0);
    pauli_assemble(f0p, fyp, fzp)
}

fn pauli_assemble(f0: C64, fy: C64, fz: C64) -> Array2<C64> {
    array![[f0 + fz, -I * fy], [I * fy, f0 - fz]]
}

/// Doubled Hermitian matrix ℋ(ω) = [[0, ω - H], [ω - H†, 0]].
///
/// Works for any square H (2N x 2N finite chain or 2x2 Bloch). The result
/// anticommutes with τ_z = diag(+I, -I) exactly by construction.
pub fn build_doubled_matrix(h: &Array2<C64>, omega: f64) -> Array2<C64> {
    let m = h.nrows();
    let mut d = Array2::<C64>::zeros((2 * m, 2 * m));
    for r in 0..m {
        for c in 0..m {
            let upper = C64::new(if r == c { omega } else { 0.0 }, 0.0) - h[[r, c]];
            d[[r, m + c]] = upper;
            d[[m + c, r]] = upper.conj();
        }
    }
    d
}
