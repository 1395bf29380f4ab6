//! Built-in verification suite: ten end-to-end checks pinning the library to
//! closed forms and cross-validated reference values. Shared by the `verify`
//! CLI subcommand and the acceptance test target.

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

use crate::disorder::{ensemble_spectrum, EnsembleSpec};
use crate::error::Result;
use crate::floquet::{bessel_j, f_function, local_drive_map, LocalDriveSpec};
use crate::greens::{
    decimation_residual, finite_green, semi_infinite_green_from, spectral_split, surface_green,
    Solver,
};
use crate::model::{
    build_doubled_matrix, build_dynamical_matrix, build_pump_matrix, Boundary, ModelParams,
};
use crate::observables::{
    added_noise, added_noise_at, gain, gain_closed_form, gain_semi_infinite, quadrature_state_at,
};
use crate::spectral::{singular_spectrum, stability_report};
use crate::topology::{band_windings, phase_diagram, winding_trace_refined, SweepSpec};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn pass(name: &'static str, detail: String) -> Self {
        CheckOutcome {
            name,
            passed: true,
            detail,
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        CheckOutcome {
            name,
            passed: false,
            detail,
        }
    }

    fn from(name: &'static str, res: Result<std::result::Result<String, String>>) -> Self {
        match res {
            Ok(Ok(d)) => Self::pass(name, d),
            Ok(Err(d)) => Self::fail(name, d),
            Err(e) => Self::fail(name, format!("error: {e}")),
        }
    }
}

fn dhn() -> ModelParams {
    ModelParams {
        g_s: 0.1,
        g_c: 0.1,
        pump: 0.75,
        ..ModelParams::canonical()
    }
}

/// Run the full suite in order; one outcome per criterion.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        check_closed_form_gain(),
        check_surface_green(),
        check_transfer_split(),
        check_winding_grids(),
        check_disorder_contrast(),
        check_double_chain_robustness(),
        check_stability_dichotomy(),
        check_noise_quantum_limit(),
        check_squeezing(),
        check_property_suites(),
    ]
}

/// 1: finite-N gain at the canonical point tracks the closed form within 5%
/// over |ω| ≤ 2, and the semi-infinite value at ω = 0 is 262144 to 1e-6.
pub fn check_closed_form_gain() -> CheckOutcome {
    let name = "closed-form-gain";
    let body = || -> Result<std::result::Result<String, String>> {
        let p = ModelParams::canonical();
        let h = build_dynamical_matrix(&p, Boundary::Open, None)?;
        let mut worst: f64 = 0.0;
        for i in 0..=80 {
            let om = -2.0 + 0.05 * i as f64;
            let g = finite_green(&h, om)?;
            let fin = gain(&g, &p, 8);
            let cf = gain_closed_form(&p, 8, om);
            worst = worst.max((fin - cf).abs() / cf);
        }
        let semi = gain_semi_infinite(&p, 8, 0.0)?;
        let rel = (semi - 262144.0).abs() / 262144.0;
        let detail = format!("finite/closed worst rel {worst:.2e}; semi-infinite rel {rel:.2e}");
        Ok(if worst < 0.05 && rel < 1e-6 {
            Ok(detail)
        } else {
            Err(detail)
        })
    };
    CheckOutcome::from(name, body())
}

/// 2: decimation surface Green's function equals [[2i,1],[-1,2i]]/(-3)
/// entrywise to 1e-10, with decimation residual < 1e-10.
pub fn check_surface_green() -> CheckOutcome {
    let name = "surface-green";
    let body = || -> Result<std::result::Result<String, String>> {
        let sg = surface_green(&ModelParams::canonical(), 0.0, Solver::FiniteSizeLimit)?;
        let expect = array![
            [C64::new(0.0, 2.0), C64::new(1.0, 0.0)],
            [C64::new(-1.0, 0.0), C64::new(0.0, 2.0)]
        ]
        .mapv(|z: C64| z / C64::new(-3.0, 0.0));
        let err = sg
            .surface
            .iter()
            .zip(expect.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        let res = decimation_residual(&sg.g00, &sg.v_plus, &sg.v_minus, &sg.surface);
        let detail = format!("entrywise err {err:.2e}; residual {res:.2e}");
        Ok(if err < 1e-10 && res < 1e-10 {
            Ok(detail)
        } else {
            Err(detail)
        })
    };
    CheckOutcome::from(name, body())
}

/// 3: forward transfer split λ = {2, 0}, P₊ = ½[[1,-i],[i,1]] to 1e-10;
/// ζ₊(0) = ln 2 to 1e-10; |ζ₊| grows past 10 along γ → 2⁺.
pub fn check_transfer_split() -> CheckOutcome {
    let name = "transfer-split";
    let body = || -> Result<std::result::Result<String, String>> {
        let p = ModelParams::canonical();
        let sg = surface_green(&p, 0.0, Solver::FiniteSizeLimit)?;
        let split = spectral_split(&sg.surface.dot(&sg.v_plus))?;
        let e_lam = (split.lambdas.0 - C64::new(2.0, 0.0))
            .norm()
            .max(split.lambdas.1.norm());
        let p_expect = array![
            [C64::new(0.5, 0.0), C64::new(0.0, -0.5)],
            [C64::new(0.0, 0.5), C64::new(0.5, 0.0)]
        ];
        let e_proj = split
            .projectors
            .0
            .iter()
            .zip(p_expect.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        let e_zeta = (split.zetas.0.re - std::f64::consts::LN_2).abs();
        let mut seq = Vec::new();
        let mut monotone = true;
        for k in 1..=5 {
            let gamma = 2.0 + 10f64.powi(-k);
            let sgk = surface_green(&p.with_gamma(gamma), 0.0, Solver::FiniteSizeLimit)?;
            let sk = spectral_split(&sgk.surface.dot(&sgk.v_plus))?;
            let z = sk.zetas.0.norm();
            if let Some(&last) = seq.last() {
                monotone &= z > last;
            }
            seq.push(z);
        }
        let diverges = monotone && *seq.last().unwrap() > 10.0;
        let detail = format!(
            "λ err {e_lam:.2e}; P₊ err {e_proj:.2e}; ζ₊ err {e_zeta:.2e}; |ζ₊| along γ→2⁺: {:?}",
            seq.iter().map(|z| (z * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
        Ok(
            if e_lam < 1e-10 && e_proj < 1e-10 && e_zeta < 1e-10 && diverges {
                Ok(detail)
            } else {
                Err(detail)
            },
        )
    };
    CheckOutcome::from(name, body())
}

/// 4: trace and band windings agree after rounding on a 101x101 (γ, ω) grid
/// with a W₁ = 1 island (nontrivial at γ = 4, ω = 0), and at the W₁ = 2 point.
pub fn check_winding_grids() -> CheckOutcome {
    let name = "winding-grids";
    let body = || -> Result<std::result::Result<String, String>> {
        let t0 = std::time::Instant::now();
        let p = ModelParams::canonical();
        let grid = phase_diagram(
            &p,
            SweepSpec::parse("gamma:0:8:101")?,
            SweepSpec::parse("omega:-4:4:101")?,
            256,
        )?;
        let mut n_ok = 0usize;
        let mut n_agree = 0usize;
        let mut w1_at_canonical = i64::MIN;
        let mut island = 0usize;
        for pt in &grid.points {
            if pt.error.is_some() {
                continue;
            }
            n_ok += 1;
            if pt.w1 == pt.w_plus + pt.w_minus {
                n_agree += 1;
            }
            if pt.w1 == 1 {
                island += 1;
            }
            if (pt.x - 4.0).abs() < 1e-9 && pt.y.abs() < 1e-9 {
                w1_at_canonical = pt.w1;
            }
        }
        let (raw2, w1_dhn) = winding_trace_refined(&dhn(), 0.0, 1024)?;
        let (wp2, wm2, _) = band_windings(&dhn(), 0.0, 1024)?;
        let elapsed = t0.elapsed().as_secs_f64();
        let detail = format!(
            "{n_agree}/{n_ok} grid points agree; W₁=1 island {island} points; W₁(4,0)={w1_at_canonical}; second grid point raw {raw2:.4} -> {w1_dhn} = {wp2}+{wm2}; {elapsed:.1}s"
        );
        let pass = n_ok > 9000
            && n_agree == n_ok
            && island > 100
            && w1_at_canonical == 1
            && w1_dhn == 2
            && wp2 == 1
            && wm2 == 1
            && elapsed < 300.0;
        Ok(if pass { Ok(detail) } else { Err(detail) })
    };
    CheckOutcome::from(name, body())
}

/// 5: ensemble-mean smallest singular value at N = 50, w = 0.1 is ≥ 10x
/// smaller in the γ = 4 phase than in the γ = 0 two-pair phase, and stays
/// below 1e-2 at w = 0.2.
pub fn check_disorder_contrast() -> CheckOutcome {
    let name = "disorder-contrast";
    let body = || -> Result<std::result::Result<String, String>> {
        let topo = ModelParams::canonical().with_n_sites(50);
        let triv = topo.with_gamma(0.0);
        let m_topo = mean_min(&EnsembleSpec::new(topo, 0.1, 12345, 0.0))?;
        let m_triv = mean_min(&EnsembleSpec::new(triv, 0.1, 12345, 0.0))?;
        let m_topo2 = mean_min(&EnsembleSpec::new(topo, 0.2, 12345, 0.0))?;
        let ratio = m_triv / m_topo;
        let detail = format!(
            "mean min sv: topo {m_topo:.3e}, trivial {m_triv:.3e} (ratio {ratio:.1e}); topo at w=0.2: {m_topo2:.3e}"
        );
        Ok(if ratio >= 10.0 && m_topo2 < 1e-2 {
            Ok(detail)
        } else {
            Err(detail)
        })
    };
    CheckOutcome::from(name, body())
}

fn mean_min(spec: &EnsembleSpec) -> Result<f64> {
    let res = ensemble_spectrum(spec)?;
    Ok(res.records.iter().map(|r| r.min_sv).sum::<f64>() / res.records.len() as f64)
}

/// 6: at the doubled-winding point, both smallest singular values stay below
/// 1e-2 at N = 50, w = 0.2 over 100 realizations.
pub fn check_double_chain_robustness() -> CheckOutcome {
    let name = "double-chain-robustness";
    let body = || -> Result<std::result::Result<String, String>> {
        let spec = EnsembleSpec::new(dhn().with_n_sites(50), 0.2, 12345, 0.0);
        let res = ensemble_spectrum(&spec)?;
        let n = res.records.len() as f64;
        let m1 = res.records.iter().map(|r| r.min_sv).sum::<f64>() / n;
        let m2 = res.records.iter().map(|r| r.second_sv).sum::<f64>() / n;
        let detail = format!("mean smallest {m1:.3e}, second {m2:.3e} over {n} realizations");
        Ok(if m1 < 1e-2 && m2 < 1e-2 {
            Ok(detail)
        } else {
            Err(detail)
        })
    };
    CheckOutcome::from(name, body())
}

/// 7: open/periodic stability dichotomy at the canonical point, and the
/// size-driven instability onset of the doubled-winding point in N ∈ [40, 60].
pub fn check_stability_dichotomy() -> CheckOutcome {
    let name = "stability-dichotomy";
    let body = || -> Result<std::result::Result<String, String>> {
        let can = ModelParams::canonical();
        let obc = stability_report(&build_dynamical_matrix(&can, Boundary::Open, None)?)?;
        let pbc = stability_report(&build_dynamical_matrix(&can, Boundary::Periodic, None)?)?;
        let s12 = stability_report(&build_dynamical_matrix(
            &dhn().with_n_sites(12),
            Boundary::Open,
            None,
        )?)?;
        let mut onset = None;
        for n in (38..=60).step_by(2) {
            let rep = stability_report(&build_dynamical_matrix(
                &dhn().with_n_sites(n),
                Boundary::Open,
                None,
            )?)?;
            if !rep.stable {
                onset = Some(n);
                break;
            }
        }
        let detail = format!(
            "canonical OBC stable={} PBC stable={}; doubled point stable at N=12: {}; instability onset N={onset:?}",
            obc.stable, pbc.stable, s12.stable
        );
        let pass = obc.stable
            && !pbc.stable
            && s12.stable
            && matches!(onset, Some(n) if (40..=60).contains(&n));
        Ok(if pass { Ok(detail) } else { Err(detail) })
    };
    CheckOutcome::from(name, body())
}

/// 8: min-over-ω added noise at the last site approaches the quantum limit
/// (< 1.2 for γ ∈ [2.05, 2.5] at the canonical family) and tends to 1.95 ± 0.1
/// with growing N at the doubled-winding point, evaluated just above its
/// stability transition γ* = 4P + 2g_s.
pub fn check_noise_quantum_limit() -> CheckOutcome {
    let name = "noise-quantum-limit";
    let body = || -> Result<std::result::Result<String, String>> {
        let mut mins = Vec::new();
        for &gamma in &[2.05, 2.1, 2.2, 2.3, 2.5] {
            let p = ModelParams::canonical().with_gamma(gamma);
            mins.push(min_noise(&p, 11, -1.0, 1.0, 201)?);
        }
        let part1 = mins.iter().all(|&m| m < 1.2 && m >= 1.0 - 1e-9)
            && mins.first() < mins.last();
        // doubled-winding family at its critical loss rate
        let d = dhn();
        let gamma_star = 4.0 * d.pump + 2.0 * d.g_s + 1e-3;
        let mut seq = Vec::new();
        for &n in &[12usize, 24, 36, 48] {
            let p = ModelParams {
                gamma: gamma_star,
                n_sites: n,
                ..d
            };
            seq.push(min_noise(&p, n - 1, -2.0, 2.0, 401)?);
        }
        let tail = *seq.last().unwrap();
        let part2 = (tail - 1.95).abs() <= 0.1
            && seq.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] < 0.1);
        // reference value at the uncapped loss rate, for context
        let at4 = min_noise(&dhn().with_n_sites(24), 23, -2.0, 2.0, 401)?;
        let detail = format!(
            "canonical-family minima {:?}; doubled point at γ*={gamma_star:.3}: {:?} (γ=4 reference {at4:.3})",
            mins.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>(),
            seq.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>()
        );
        Ok(if part1 && part2 { Ok(detail) } else { Err(detail) })
    };
    CheckOutcome::from(name, body())
}

fn min_noise(p: &ModelParams, j: usize, om_lo: f64, om_hi: f64, n_om: usize) -> Result<f64> {
    let h = build_dynamical_matrix(p, Boundary::Open, None)?;
    let pm = build_pump_matrix(p, Boundary::Open);
    let mut best = f64::INFINITY;
    let mut n_ok = 0usize;
    for i in 0..n_om {
        let om = om_lo + (om_hi - om_lo) * i as f64 / (n_om - 1) as f64;
        // grid points where (ω - H) is numerically singular are excluded
        let g = match finite_green(&h, om) {
            Ok(g) => g,
            Err(crate::error::TwpaError::Singular(_)) => continue,
            Err(e) => return Err(e),
        };
        best = best.min(added_noise(&g, &pm, p, j, om).n_add);
        n_ok += 1;
    }
    if n_ok == 0 {
        return Err(crate::error::TwpaError::NonConvergence(
            "no frequency grid point was invertible".into(),
        ));
    }
    Ok(best)
}

/// 9: canonical point squeezes the P quadrature at the last site across the
/// amplification window while X is amplified; Heisenberg products hold; the
/// doubled-winding point shows no squeezing anywhere.
pub fn check_squeezing() -> CheckOutcome {
    let name = "squeezing";
    let body = || -> Result<std::result::Result<String, String>> {
        let th = std::f64::consts::FRAC_PI_4;
        let can = ModelParams::canonical();
        let mut ok_can = true;
        let mut min_heis = f64::INFINITY;
        let mut worst_vp: f64 = 0.0;
        for i in 0..=20 {
            let om = -1.0 + 0.1 * i as f64;
            let q = quadrature_state_at(&can, 11, om, th)?;
            ok_can &= q.var_p < 1.0 && q.var_x > 1e2;
            worst_vp = worst_vp.max(q.var_p);
            min_heis = min_heis.min(q.var_x * q.var_p);
        }
        // Heisenberg across parameter sets
        for p in [can, dhn(), ModelParams::canonical().with_gamma(3.0), ModelParams {
            delta: 0.3,
            g_s: 0.8,
            g_c: 0.5,
            pump: 0.2,
            ..ModelParams::canonical()
        }] {
            for &om in &[0.0, 0.5, 1.3] {
                for &j in &[0usize, 5, 11] {
                    let q = quadrature_state_at(&p, j, om, th)?;
                    min_heis = min_heis.min(q.var_x * q.var_p);
                }
            }
        }
        let mut ok_dhn = true;
        for &om in &[0.0, 0.3, 0.6, 1.0] {
            for &j in &[1usize, 4, 8, 11] {
                let q = quadrature_state_at(&dhn(), j, om, th)?;
                ok_dhn &= q.var_x > 1.0 && q.var_p > 1.0;
            }
        }
        let detail = format!(
            "canonical window: var_p ≤ {worst_vp:.4} with var_x > 1e2: {ok_can}; min Heisenberg {min_heis:.6}; doubled point unsqueezed: {ok_dhn}"
        );
        Ok(if ok_can && ok_dhn && min_heis >= 1.0 - 1e-9 {
            Ok(detail)
        } else {
            Err(detail)
        })
    };
    CheckOutcome::from(name, body())
}

/// 10: always-on property suites — exact chiral anticommutation, SVD/eigen
/// pairing, projector algebra, finite ↔ semi-infinite agreement, Bessel
/// identities and byte-level determinism.
pub fn check_property_suites() -> CheckOutcome {
    let name = "property-suites";
    let body = || -> Result<std::result::Result<String, String>> {
        let sets = [
            ModelParams::canonical(),
            dhn(),
            ModelParams {
                delta: 0.3,
                g_s: 0.8,
                g_c: 0.5,
                pump: 0.2,
                n_sites: 8,
                ..ModelParams::canonical()
            },
            ModelParams::canonical().with_gamma(2.2),
        ];
        // chiral anticommutation: off-diagonal doubled blocks only, exact
        for p in &sets {
            let h = build_dynamical_matrix(p, Boundary::Open, None)?;
            let d = build_doubled_matrix(&h.entries, 0.37);
            let m = d.nrows() / 2;
            for r in 0..2 * m {
                for c in 0..2 * m {
                    if (r < m) == (c < m) && d[[r, c]] != C64::new(0.0, 0.0) {
                        return Ok(Err("chiral anticommutation violated".into()));
                    }
                    if d[[r, c]] != d[[c, r]].conj() {
                        return Ok(Err("doubled matrix not Hermitian".into()));
                    }
                }
            }
        }
        // SVD reconstruction + pairing enforced inside singular_spectrum
        for p in &sets {
            let h = build_dynamical_matrix(p, Boundary::Open, None)?;
            singular_spectrum(&h, 0.41)?;
        }
        // projector algebra enforced inside spectral_split
        for p in &sets {
            let sg = surface_green(p, 0.2, Solver::FiniteSizeLimit)?;
            spectral_split(&sg.surface.dot(&sg.v_plus))?;
        }
        // finite <-> semi-infinite agreement at stable sets
        let p = ModelParams {
            delta: 0.3,
            g_s: 0.8,
            g_c: 0.5,
            pump: 0.2,
            ..ModelParams::canonical()
        };
        let sg = surface_green(&p, 0.4, Solver::FiniteSizeLimit)?;
        let h = build_dynamical_matrix(&p.with_n_sites(40), Boundary::Open, None)?;
        let fin = finite_green(&h, 0.4)?;
        let mut worst: f64 = 0.0;
        for (j, l) in [(1usize, 0usize), (3, 2), (5, 5), (4, 7), (8, 3)] {
            let semi = semi_infinite_green_from(&sg, j, l)?;
            let blk = fin.nambu_block(j, l);
            let scale = blk.iter().map(|z| z.norm()).fold(1e-300, f64::max);
            let err = semi
                .iter()
                .zip(blk.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0_f64, f64::max)
                / scale;
            worst = worst.max(err);
        }
        // Bessel identities
        let f = f_function(1.1, 0.9, 60)?;
        let fm = f_function(1.1, -0.9, 60)?;
        let sum_sq: f64 = (-60i64..=60).map(|n| bessel_j(n, 1.7).powi(2)).sum();
        let map = local_drive_map(&LocalDriveSpec::new(1.0, 1.7, 0.0))?;
        let bessel_ok = (f - fm).abs() < 1e-12
            && (sum_sq - 1.0).abs() < 1e-12
            && (map.hop + 1.0).abs() < 1e-12;
        // byte-level determinism of a parallel ensemble
        let spec = EnsembleSpec {
            n_realizations: 8,
            ..EnsembleSpec::new(ModelParams::canonical(), 0.15, 7, 0.0)
        };
        let fmt = |r: &crate::disorder::EnsembleResult| {
            r.records
                .iter()
                .map(|rec| format!("{},{:.16e},{:.16e}", rec.realization, rec.min_sv, rec.second_sv))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let bytes_a = fmt(&ensemble_spectrum(&spec)?);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| crate::error::TwpaError::Backend(e.to_string()))?;
        let bytes_b = pool.install(|| ensemble_spectrum(&spec).map(|r| fmt(&r)))?;
        let noise_consistency = {
            let a = added_noise_at(&ModelParams::canonical(), 8, 0.0)?;
            (a.n_add - a.n_amp / a.gain).abs() < 1e-12
        };
        let detail = format!(
            "finite↔semi worst rel {worst:.2e}; Bessel ok {bessel_ok}; deterministic bytes {}; ratio identity {noise_consistency}",
            bytes_a == bytes_b
        );
        Ok(if worst < 1e-6 && bessel_ok && bytes_a == bytes_b && noise_consistency {
            Ok(detail)
        } else {
            Err(detail)
        })
    };
    CheckOutcome::from(name, body())
}
