//! Dissipative Green's functions: exact finite-N inverse, semi-infinite surface
//! Green's function by decimation, projector/eigenvalue splits, inverse
//! coherence lengths, and arbitrary semi-infinite blocks.
//!
//! Direction convention: with the `e^{+iφ}`-subdiagonal hopping of module
//! [`crate::model`], the forward transfer object (edge → bulk propagation, the
//! amplified direction) is `G00·V₊` with `V₊` from [`hopping_matrices`]. This is
//! verified operationally against the finite-N inverse by
//! [`resolve_direction`], which the test suites assert at every working point.

use ndarray::prelude::*;
use ndarray_linalg::{Inverse, Norm, OperationNorm};
use num_complex::Complex64 as C64;

use crate::error::{Result, TwpaError};
use crate::model::{build_dynamical_matrix, Boundary, DynamicalMatrix, ModelParams, I};
use crate::spectral::omega_minus_h;

/// Exact inverse (ω - H_nh)⁻¹ with its condition number.
#[derive(Debug, Clone)]
pub struct FiniteGreen {
    pub omega: f64,
    pub matrix: Array2<C64>,
    pub n_sites: usize,
    pub condition: f64,
}

impl FiniteGreen {
    /// Normal block entry G_{j,l}.
    pub fn normal(&self, j: usize, l: usize) -> C64 {
        self.matrix[[j, l]]
    }

    /// Anomalous block entry G_{j,N+l}.
    pub fn anomalous(&self, j: usize, l: usize) -> C64 {
        self.matrix[[j, self.n_sites + l]]
    }

    /// 2x2 Nambu block [[G_{j,l}, G_{j,N+l}], [G_{N+j,l}, G_{N+j,N+l}]].
    pub fn nambu_block(&self, j: usize, l: usize) -> Array2<C64> {
        let n = self.n_sites;
        array![
            [self.matrix[[j, l]], self.matrix[[j, n + l]]],
            [self.matrix[[n + j, l]], self.matrix[[n + j, n + l]]]
        ]
    }
}

pub fn finite_green(h: &DynamicalMatrix, omega: f64) -> Result<FiniteGreen> {
    let m = omega_minus_h(&h.entries, omega);
    let mut g = m.inv().map_err(|e| TwpaError::Singular(e.to_string()))?;
    // condition estimate from 1-norms (cheap, adequate as a guard)
    let condition = m.opnorm_one()? * g.opnorm_one()?;
    if condition > 1e12 {
        return Err(TwpaError::Singular(format!(
            "condition number {condition:.3e} > 1e12 at omega = {omega}"
        )));
    }
    // identity invariant, with Newton refinement G <- G + G(I - MG). The
    // residual floor in double precision is eps*|M||G|, so the 1e-9 budget is
    // measured relative to the magnitude of G (entries grow like the gain).
    let dim = m.nrows();
    let scale = 1.0 + g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut err = f64::INFINITY;
    for _ in 0..4 {
        let mut res = -m.dot(&g);
        for r in 0..dim {
            res[[r, r]] += C64::new(1.0, 0.0);
        }
        err = res.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
        if err <= 1e-9 {
            break;
        }
        g = &g + &g.dot(&res);
    }
    if err > 1e-9 {
        return Err(TwpaError::Singular(format!(
            "(omega - H) G = I violated by {err:.3e} (condition {condition:.3e})"
        )));
    }
    Ok(FiniteGreen {
        omega,
        matrix: g,
        n_sites: h.n_sites(),
        condition,
    })
}

/// Isolated-site Green's function:
/// inverse of [[ω-Δ+i(γ-4P)/2, -g_s], [g_s, ω+Δ+i(γ-4P)/2]].
pub fn bare_site_green(params: &ModelParams, omega: f64) -> Result<Array2<C64>> {
    let damp = (params.gamma - 4.0 * params.pump) / 2.0;
    let m = array![
        [C64::new(omega - params.delta, damp), C64::new(-params.g_s, 0.0)],
        [C64::new(params.g_s, 0.0), C64::new(omega + params.delta, damp)]
    ];
    inv2(&m).ok_or_else(|| TwpaError::Singular("bare site Green's function".into()))
}

/// Forward/backward 2x2 hopping matrices
/// V± = [[J e^{±iφ} + iP, g_c], [-g_c, -J e^{∓iφ} + iP]].
pub fn hopping_matrices(params: &ModelParams) -> (Array2<C64>, Array2<C64>) {
    let hf = C64::from_polar(params.hop, params.phi);
    let ip = I * params.pump;
    let gc = C64::new(params.g_c, 0.0);
    let v_plus = array![[hf + ip, gc], [-gc, -hf.conj() + ip]];
    let v_minus = array![[hf.conj() + ip, gc], [-gc, -hf + ip]];
    (v_plus, v_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Surface block of the finite-N inverse, taken to the N → ∞ limit by a
    /// site-elimination recursion (authoritative; selects the physical branch).
    FiniteSizeLimit,
    /// Damped polynomial iteration G ← g00[1 + V₋ G V₊ G] (fast path; must
    /// agree with the finite-size limit when both converge).
    FixedPoint,
}

/// Surface Green's function of the semi-infinite chain.
#[derive(Debug, Clone)]
pub struct SurfaceGreen {
    pub omega: f64,
    pub g00: Array2<C64>,
    pub surface: Array2<C64>,
    pub v_plus: Array2<C64>,
    pub v_minus: Array2<C64>,
    /// Relative residual of the decimation equation.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Relative residual ‖G - g00[1 + V₋ G V₊ G]‖_F / (1 + ‖G‖_F).
pub fn decimation_residual(
    g00: &Array2<C64>,
    vp: &Array2<C64>,
    vm: &Array2<C64>,
    g: &Array2<C64>,
) -> f64 {
    let rhs = g00.dot(&(Array2::eye(2) + vm.dot(g).dot(vp).dot(g)));
    (g - &rhs).norm() / (1.0 + g.norm())
}

pub fn surface_green(params: &ModelParams, omega: f64, solver: Solver) -> Result<SurfaceGreen> {
    params.validate()?;
    let g00 = bare_site_green(params, omega)?;
    let (vp, vm) = hopping_matrices(params);
    let (surface, iterations, converged) = match solver {
        Solver::FiniteSizeLimit => surface_by_recursion(&g00, &vp, &vm)?,
        Solver::FixedPoint => surface_by_fixed_point(&g00, &vp, &vm)?,
    };
    let residual = decimation_residual(&g00, &vp, &vm, &surface);
    Ok(SurfaceGreen {
        omega,
        g00,
        surface,
        v_plus: vp,
        v_minus: vm,
        residual,
        converged,
        iterations,
    })
}

/// Site-elimination recursion: T_k is exactly the (0,0) Nambu block of the
/// finite chain with k sites, via T_{k+1} = [g00⁻¹ - V₋ T_k V₊]⁻¹. Relative
/// tolerance with best-iterate tracking keeps the limit exact arbitrarily
/// close to criticality, where late iterates wander in floating-point noise.
fn surface_by_recursion(
    g00: &Array2<C64>,
    vp: &Array2<C64>,
    vm: &Array2<C64>,
) -> Result<(Array2<C64>, usize, bool)> {
    const N_MAX: usize = 512;
    const TOL: f64 = 1e-11;
    let g0inv = inv2(g00).ok_or_else(|| TwpaError::Singular("bare g00".into()))?;
    let mut t = g00.clone();
    let mut best: (f64, Array2<C64>, usize) = (f64::INFINITY, t.clone(), 1);
    let mut worse = 0usize;
    for k in 2..=N_MAX {
        let m = &g0inv - &vm.dot(&t).dot(vp);
        let det = m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]];
        if det.norm() < 1e-290 {
            break;
        }
        let tn = inv2(&m).unwrap();
        let rel = max_abs(&(&tn - &t)) / max_abs(&tn).max(1e-300);
        if rel < best.0 {
            best = (rel, tn.clone(), k);
            worse = 0;
        } else {
            worse += 1;
            if worse >= 8 {
                break;
            }
        }
        if rel < TOL {
            return Ok((tn, k, true));
        }
        t = tn;
    }
    let (rel, t, k) = best;
    if rel < 1e-6 {
        Ok((t, k, true))
    } else {
        Err(TwpaError::NonConvergence(format!(
            "finite-size limit: best relative delta {rel:.3e} at k = {k} (N_max = {N_MAX})"
        )))
    }
}

fn surface_by_fixed_point(
    g00: &Array2<C64>,
    vp: &Array2<C64>,
    vm: &Array2<C64>,
) -> Result<(Array2<C64>, usize, bool)> {
    const MIX: f64 = 0.5;
    const TOL: f64 = 1e-12;
    const IT_MAX: usize = 100_000;
    let mut g = g00.clone();
    for it in 0..IT_MAX {
        let gn = g00.dot(&(Array2::eye(2) + vm.dot(&g).dot(vp).dot(&g)));
        if !gn.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(TwpaError::NonConvergence(format!(
                "fixed-point iteration diverged at step {it}; use the finite-size-limit solver"
            )));
        }
        let delta = (&gn - &g).norm();
        if delta < TOL {
            return Ok((gn, it + 1, true));
        }
        g = &gn * MIX + &g * (1.0 - MIX);
    }
    Err(TwpaError::NonConvergence(format!(
        "fixed-point iteration did not reach {TOL:.0e} in {IT_MAX} steps; use the finite-size-limit solver"
    )))
}

/// Eigenvalues, projectors and inverse coherence lengths of a 2x2 transfer
/// object, ordered by |λ| descending.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub lambdas: (C64, C64),
    pub projectors: (Array2<C64>, Array2<C64>),
    pub zetas: (C64, C64),
}

/// Projector split m = λ₊P₊ + λ₋P₋ with P± = ±(m - λ∓)/(λ₊ - λ₋).
pub fn spectral_split(m: &Array2<C64>) -> Result<SpectralSplit> {
    let tr = m[[0, 0]] + m[[1, 1]];
    let det = m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]];
    let disc = (tr * tr - 4.0 * det).sqrt();
    let mut l1 = (tr + disc) / 2.0;
    let mut l2 = (tr - disc) / 2.0;
    if l2.norm() > l1.norm() {
        std::mem::swap(&mut l1, &mut l2);
    }
    let gap = l1 - l2;
    if gap.norm() <= 1e-12 {
        return Err(TwpaError::DegenerateSplit);
    }
    let id: Array2<C64> = Array2::eye(2);
    let p_plus = (m - &(&id * l2)) / gap;
    let p_minus = (&(&id * l1) - m) / gap;
    // projector algebra invariants
    let scale = 1.0 + p_plus.norm() + p_minus.norm();
    let idem = (&p_plus.dot(&p_plus) - &p_plus).norm()
        + (&p_minus.dot(&p_minus) - &p_minus).norm();
    let ortho = p_plus.dot(&p_minus).norm();
    let complete = (&(&p_plus + &p_minus) - &id).norm();
    let recon = (&(&p_plus * l1 + &p_minus * l2) - m).norm() / (1.0 + m.norm());
    if idem / scale > 1e-10 || ortho / scale > 1e-10 || complete / scale > 1e-10 || recon > 1e-10
    {
        return Err(TwpaError::Backend(format!(
            "projector invariants violated: idem {idem:.2e}, ortho {ortho:.2e}, complete {complete:.2e}, recon {recon:.2e}"
        )));
    }
    Ok(SpectralSplit {
        zetas: (zeta_of(l1, l1), zeta_of(l2, l1)),
        lambdas: (l1, l2),
        projectors: (p_plus, p_minus),
    })
}

/// ζ = log λ; λ numerically zero maps to the Re = -∞ sentinel.
fn zeta_of(lambda: C64, leading: C64) -> C64 {
    if lambda.norm() < 1e-14 * leading.norm().max(1.0) {
        C64::new(f64::NEG_INFINITY, 0.0)
    } else {
        lambda.ln()
    }
}

/// Which of G00·V± propagates forward (edge → bulk), resolved against the
/// unambiguous finite-N inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    VPlus,
    VMinus,
}

/// Operational direction check: compares [G00·V±]·G00 against the finite-N
/// Ĝ_{1,0} block and returns the matching label.
pub fn resolve_direction(params: &ModelParams, omega: f64) -> Result<Direction> {
    let sg = surface_green(params, omega, Solver::FiniteSizeLimit)?;
    let n_ref = 30.max(params.n_sites);
    let h = build_dynamical_matrix(&params.with_n_sites(n_ref), Boundary::Open, None)?;
    let fin = finite_green(&h, omega)?;
    let target = fin.nambu_block(1, 0);
    let cand_p = sg.surface.dot(&sg.v_plus).dot(&sg.surface);
    let cand_m = sg.surface.dot(&sg.v_minus).dot(&sg.surface);
    let err_p = max_abs(&(&cand_p - &target));
    let err_m = max_abs(&(&cand_m - &target));
    Ok(if err_p <= err_m {
        Direction::VPlus
    } else {
        Direction::VMinus
    })
}

/// Inverse coherence lengths ζ± = log λ± of the forward transfer object G00·V₊.
pub fn coherence_lengths(params: &ModelParams, omega: f64) -> Result<(C64, C64)> {
    let sg = surface_green(params, omega, Solver::FiniteSizeLimit)?;
    let split = spectral_split(&sg.surface.dot(&sg.v_plus))?;
    Ok(split.zetas)
}

/// λ below this fraction of the leading eigenvalue is treated as an exact zero
/// branch (the transfer objects are singular at rank-1 working points, and the
/// numerical λ₋ is pure rounding noise there).
fn negligible(lambda: C64, leading: C64) -> bool {
    lambda.norm() < 1e-14 * leading.norm().max(1e-300)
}

/// M^n via the projector split: Σ λ^n P (exact for non-defective 2x2).
pub fn transfer_power(split: &SpectralSplit, n: usize) -> Array2<C64> {
    if n == 0 {
        return Array2::eye(2);
    }
    let (l1, l2) = split.lambdas;
    let mut out = &split.projectors.0 * l1.powi(n as i32);
    if !negligible(l2, l1) {
        out = out + &split.projectors.1 * l2.powi(n as i32);
    }
    out
}

fn mat_pow_naive(m: &Array2<C64>, n: usize) -> Array2<C64> {
    let mut out: Array2<C64> = Array2::eye(2);
    for _ in 0..n {
        out = out.dot(m);
    }
    out
}

/// Semi-infinite Ĝ_{j,l}(ω): leading term [G00·V_fwd]^{j-l}·G00 (or the
/// backward analogue for j < l) plus the reflection sum
/// Σ_{r=0}^{min(j,l)-1} [G00·V_fwd]^{j-r} [G00·V_bwd]^{l-r} G00,
/// evaluated in geometric (projector) form.
pub fn semi_infinite_green(
    params: &ModelParams,
    omega: f64,
    j: usize,
    l: usize,
) -> Result<Array2<C64>> {
    let sg = surface_green(params, omega, Solver::FiniteSizeLimit)?;
    semi_infinite_green_from(&sg, j, l)
}

pub fn semi_infinite_green_from(sg: &SurfaceGreen, j: usize, l: usize) -> Result<Array2<C64>> {
    let mf = sg.surface.dot(&sg.v_plus);
    let mb = sg.surface.dot(&sg.v_minus);
    let splits = (spectral_split(&mf), spectral_split(&mb));
    let (pow_f, pow_b): (Box<dyn Fn(usize) -> Array2<C64>>, Box<dyn Fn(usize) -> Array2<C64>>) =
        match &splits {
            (Ok(sf), Ok(sb)) => {
                let (sf, sb) = (sf.clone(), sb.clone());
                (
                    Box::new(move |n| transfer_power(&sf, n)),
                    Box::new(move |n| transfer_power(&sb, n)),
                )
            }
            // defective transfer matrix: fall back to repeated multiplication
            _ => (
                Box::new({
                    let mf = mf.clone();
                    move |n| mat_pow_naive(&mf, n)
                }),
                Box::new({
                    let mb = mb.clone();
                    move |n| mat_pow_naive(&mb, n)
                }),
            ),
        };
    let lead = if j >= l {
        pow_f(j - l).dot(&sg.surface)
    } else {
        pow_b(l - j).dot(&sg.surface)
    };
    let mut total = lead;
    let r_max = j.min(l); // exclusive sum r = 0 .. min(j,l)-1
    if r_max > 0 {
        if let (Ok(sf), Ok(sb)) = &splits {
            total = total + reflection_sum_geometric(sf, sb, j, l, r_max).dot(&sg.surface);
        } else {
            for r in 0..r_max {
                total = total + pow_f(j - r).dot(&pow_b(l - r)).dot(&sg.surface);
            }
        }
    }
    Ok(total)
}

/// Σ_{r=0}^{R-1} M_f^{j-r} M_b^{l-r} as Σ_{a,b} P_a^f P_b^b · λ-geometric sums.
/// Branches with λ = 0 contribute nothing (all exponents are ≥ 1).
fn reflection_sum_geometric(
    sf: &SpectralSplit,
    sb: &SpectralSplit,
    j: usize,
    l: usize,
    r_max: usize,
) -> Array2<C64> {
    let lf = [sf.lambdas.0, sf.lambdas.1];
    let lb = [sb.lambdas.0, sb.lambdas.1];
    let pf = [&sf.projectors.0, &sf.projectors.1];
    let pb = [&sb.projectors.0, &sb.projectors.1];
    let mut sum = Array2::<C64>::zeros((2, 2));
    for a in 0..2 {
        if negligible(lf[a], lf[0]) {
            continue;
        }
        for b in 0..2 {
            if negligible(lb[b], lb[0]) {
                continue;
            }
            let base = lf[a].powi(j as i32) * lb[b].powi(l as i32);
            let q = (lf[a] * lb[b]).inv();
            let geo = if (q - C64::new(1.0, 0.0)).norm() < 1e-12 {
                C64::new(r_max as f64, 0.0)
            } else {
                (q.powi(r_max as i32) - 1.0) / (q - 1.0)
            };
            sum = sum + pf[a].dot(pb[b]) * (base * geo);
        }
    }
    sum
}

fn inv2(m: &Array2<C64>) -> Option<Array2<C64>> {
    let det = m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]];
    if det.norm() < 1e-300 {
        return None;
    }
    Some(array![[m[[1, 1]] / det, -m[[0, 1]] / det], [-m[[1, 0]] / det, m[[0, 0]] / det]])
}

fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn asym() -> ModelParams {
        ModelParams {
            delta: 0.3,
            g_s: 0.8,
            g_c: 0.5,
            pump: 0.2,
            ..ModelParams::canonical()
        }
    }

    fn close(a: &Array2<C64>, b: &Array2<C64>, tol: f64) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).norm() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn bare_green_canonical() {
        let g = bare_site_green(&ModelParams::canonical(), 0.0).unwrap();
        let expect = array![[c(0.0, 2.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 2.0)]]
            .mapv(|z: C64| z / c(-3.0, 0.0));
        close(&g, &expect, 1e-14);
        // g_s = 0: diagonal 1/(omega + i(gamma-4P)/2)
        let p = ModelParams {
            g_s: 0.0,
            ..ModelParams::canonical()
        };
        let g2 = bare_site_green(&p, 0.7).unwrap();
        let d = c(0.7, 2.0).inv();
        close(&g2, &array![[d, c(0.0, 0.0)], [c(0.0, 0.0), d]], 1e-14);
    }

    #[test]
    fn hopping_matrices_canonical() {
        let (vp, vm) = hopping_matrices(&ModelParams::canonical());
        close(
            &vp,
            &array![[c(0.0, 1.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 1.0)]],
            1e-14,
        );
        close(
            &vm,
            &array![[c(0.0, -1.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, -1.0)]],
            1e-14,
        );
        // sum identity
        let p = asym();
        let (vp, vm) = hopping_matrices(&p);
        let s = &vp + &vm;
        let expect = array![
            [
                c(2.0 * p.phi.cos(), 2.0 * p.pump),
                c(2.0 * p.g_c, 0.0)
            ],
            [
                c(-2.0 * p.g_c, 0.0),
                c(-2.0 * p.phi.cos(), 2.0 * p.pump)
            ]
        ];
        close(&s, &expect, 1e-14);
    }

    #[test]
    fn surface_green_canonical_both_solvers() {
        let expect = array![[c(0.0, 2.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 2.0)]]
            .mapv(|z: C64| z / c(-3.0, 0.0));
        for solver in [Solver::FiniteSizeLimit, Solver::FixedPoint] {
            let sg = surface_green(&ModelParams::canonical(), 0.0, solver).unwrap();
            close(&sg.surface, &expect, 1e-10);
            assert!(sg.residual < 1e-10, "residual {}", sg.residual);
            assert!(sg.converged);
        }
    }

    #[test]
    fn surface_green_matches_finite_n() {
        let p = asym();
        let sg = surface_green(&p, 0.4, Solver::FiniteSizeLimit).unwrap();
        let h = build_dynamical_matrix(&p.with_n_sites(40), Boundary::Open, None).unwrap();
        let fin = finite_green(&h, 0.4).unwrap();
        close(&sg.surface, &fin.nambu_block(0, 0), 1e-9);
    }

    #[test]
    fn decoupled_limit_is_bare() {
        let p = ModelParams {
            hop: 1e-9,
            g_c: 0.0,
            ..ModelParams::canonical()
        };
        let sg = surface_green(&p, 0.0, Solver::FiniteSizeLimit).unwrap();
        close(&sg.surface, &sg.g00, 1e-8);
    }

    #[test]
    fn split_canonical_transfer() {
        let sg = surface_green(&ModelParams::canonical(), 0.0, Solver::FiniteSizeLimit).unwrap();
        let split = spectral_split(&sg.surface.dot(&sg.v_plus)).unwrap();
        assert!((split.lambdas.0 - c(2.0, 0.0)).norm() < 1e-10);
        assert!(split.lambdas.1.norm() < 1e-10);
        let p_expect = array![[c(0.5, 0.0), c(0.0, -0.5)], [c(0.0, 0.5), c(0.5, 0.0)]];
        close(&split.projectors.0, &p_expect, 1e-10);
        // backward object contracts
        let back = spectral_split(&sg.surface.dot(&sg.v_minus)).unwrap();
        assert!(back.lambdas.0.norm() < 1.0);
        assert!((back.lambdas.0 - c(-2.0 / 3.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn split_simple_cases() {
        assert!(matches!(
            spectral_split(&Array2::eye(2)),
            Err(TwpaError::DegenerateSplit)
        ));
        let m = array![[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let s = spectral_split(&m).unwrap();
        assert!((s.lambdas.0 - c(3.0, 0.0)).norm() < 1e-14);
        close(
            &s.projectors.0,
            &array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]],
            1e-14,
        );
    }

    #[test]
    fn coherence_lengths_canonical_family() {
        let (zp, zm) = coherence_lengths(&ModelParams::canonical(), 0.0).unwrap();
        assert_abs_diff_eq!(zp.re, std::f64::consts::LN_2, epsilon = 1e-10);
        assert_abs_diff_eq!(zp.im, 0.0, epsilon = 1e-10);
        assert!(zm.re == f64::NEG_INFINITY);
        // divergence toward gamma = 2: analytic ln(2/(gamma/2 - 1))
        for gamma in [2.5, 2.1, 2.01] {
            let p = ModelParams::canonical().with_gamma(gamma);
            let (zp, _) = coherence_lengths(&p, 0.0).unwrap();
            let analytic = (2.0 / (gamma / 2.0 - 1.0)).ln();
            assert_abs_diff_eq!(zp.re, analytic, epsilon = 1e-6 * analytic);
        }
    }

    #[test]
    fn direction_resolution() {
        assert_eq!(
            resolve_direction(&ModelParams::canonical(), 0.0).unwrap(),
            Direction::VPlus
        );
        assert_eq!(resolve_direction(&asym(), 0.4).unwrap(), Direction::VPlus);
    }

    #[test]
    fn semi_infinite_frozen_entries() {
        let p = ModelParams::canonical();
        let sg = surface_green(&p, 0.0, Solver::FiniteSizeLimit).unwrap();
        // j = l = 0 is the surface itself
        close(
            &semi_infinite_green_from(&sg, 0, 0).unwrap(),
            &sg.surface,
            1e-12,
        );
        // j=1, l=0: 2 P+ G00 = [[-i,-1],[1,-i]]
        let g10 = semi_infinite_green_from(&sg, 1, 0).unwrap();
        close(
            &g10,
            &array![[c(0.0, -1.0), c(-1.0, 0.0)], [c(1.0, 0.0), c(0.0, -1.0)]],
            1e-10,
        );
        // rank-1 dominance: smallest singular value of G_{j,0} vanishes for j >= 1
        let det = g10[[0, 0]] * g10[[1, 1]] - g10[[0, 1]] * g10[[1, 0]];
        assert!(det.norm() / 2.0 < 1e-10);
    }

    #[test]
    fn semi_infinite_matches_finite_n() {
        let p = asym();
        let om = 0.4;
        let sg = surface_green(&p, om, Solver::FiniteSizeLimit).unwrap();
        let h = build_dynamical_matrix(&p.with_n_sites(60), Boundary::Open, None).unwrap();
        let fin = finite_green(&h, om).unwrap();
        for (j, l) in [(1, 0), (0, 1), (3, 2), (2, 3), (5, 5), (4, 7), (8, 3)] {
            let semi = semi_infinite_green_from(&sg, j, l).unwrap();
            let blk = fin.nambu_block(j, l);
            let scale = max_abs(&blk).max(1e-300);
            let rel = max_abs(&(&semi - &blk)) / scale;
            assert!(rel < 1e-6, "G[{j},{l}] relative error {rel:.2e}");
        }
    }

    #[test]
    fn finite_green_gain_magnitude() {
        let h = build_dynamical_matrix(&ModelParams::canonical(), Boundary::Open, None).unwrap();
        let g = finite_green(&h, 0.0).unwrap();
        let gain = 16.0 * g.normal(8, 0).norm_sqr();
        let closed = 262144.0;
        assert!((gain - closed).abs() / closed < 0.05, "gain {gain}");
    }
}
