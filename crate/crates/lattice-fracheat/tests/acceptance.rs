//! One line per acceptance criterion, each with its pinned tolerance.

mod common;

use lattice_fracheat::counterexample::{build_slow_datum, verify_slow_bound};
use lattice_fracheat::graph_dirichlet::*;
use lattice_fracheat::kernel::synthesize_kernel;
use lattice_fracheat::lattice_core::{frac_laplacian_on, laplacian_stencil, operator_norm_bound, TorusGrid};
use lattice_fracheat::semigroup::{dyadic_times, heavy_tail_datum, no_moment_convergence_check, rate_sweeps, scaled_tolerance, Accuracy};
use lattice_fracheat::stable_profile::{optimality_constant, ScalingLimitProbe, StableProfileEvaluator};
use lattice_fracheat::{FracOrder, LatticeField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

type Outcome = Result<(bool, String), String>;

fn order(s: f64) -> FracOrder {
    FracOrder::new(s).unwrap()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Pointwise tolerance on the mass and positivity grid. Heavy-tailed
/// kernels in `d = 2` use a loose absolute value so the period stays at
/// `2L + 1`.
fn grid_tolerance(d: usize, s: FracOrder, t: f64) -> f64 {
    if d == 1 || s.is_local() {
        scaled_tolerance(1e-4, t, s, d)
    } else {
        5e-3
    }
}

fn c1_bessel() -> Outcome {
    let mut worst = 0.0f64;
    for t in [1.0, 4.0, 16.0] {
        let k = synthesize_kernel(t, FracOrder::ONE, 1, 1e-12).map_err(err)?;
        for x in 0..=10 {
            worst = worst.max((k.value(&[x]) - common::bessel_kernel(t, x)).abs());
        }
    }
    Ok((worst < 1e-8, format!("max |G - e^(-2t) I_x(2t)| = {worst:.2e} (tol 1e-8)")))
}

fn c2_subordination() -> Outcome {
    let mut worst = 0.0f64;
    for t in [4.0, 16.0] {
        let k = synthesize_kernel(t, order(0.5), 1, 1e-9).map_err(err)?;
        for x in 0..=10 {
            worst = worst.max((k.value(&[x]) - common::subordinated_half(t, x)).abs());
        }
    }
    Ok((worst < 1e-6, format!("max |G - subordination| = {worst:.2e} (tol 1e-6)")))
}

struct GridStats {
    mass_err: f64,
    min_value: f64,
}

fn kernel_grid() -> Result<GridStats, String> {
    let mut st = GridStats { mass_err: 0.0, min_value: f64::INFINITY };
    for d in [1, 2] {
        for s in [0.5, 0.75, 1.0] {
            let s = order(s);
            for t in dyadic_times(4, 12) {
                let k = synthesize_kernel(t, s, d, grid_tolerance(d, s, t)).map_err(err)?;
                st.mass_err = st.mass_err.max((k.mass() - 1.0).abs());
                st.min_value = st.min_value.min(k.min_value());
            }
        }
    }
    Ok(st)
}

fn c3_mass(grid: &Result<GridStats, String>) -> Outcome {
    let g = grid.as_ref().map_err(|e| e.clone())?;
    Ok((
        g.mass_err < 1e-9 && g.min_value > 0.0,
        format!("max |mass - 1| = {:.2e} (tol 1e-9), min value = {:.3e}", g.mass_err, g.min_value),
    ))
}

fn c4_operator_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for d in [1, 2] {
        for s in [0.25, 0.5, 0.75, 1.0] {
            let s = order(s);
            for p in [1.0, 1.5, 2.0, f64::INFINITY] {
                for _ in 0..100 {
                    let r = rng.gen_range(1..=6usize);
                    let vals: Vec<f64> = (0..(2 * r + 1).pow(d as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let u = LatticeField::from_values(d, r, vals).map_err(err)?;
                    let out = if s.is_local() {
                        laplacian_stencil(&u).map_err(err)?
                    } else {
                        let grid = TorusGrid::for_radius(d, 8 * r + 8).map_err(err)?;
                        frac_laplacian_on(&u, s, &grid, Some(grid.max_radius())).map_err(err)?
                    };
                    let ratio = out.norm(p) / u.norm(p) / operator_norm_bound(d, s);
                    worst = worst.max(ratio);
                    if ratio > 1.0 {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations in 3200 fields, worst ratio to bound {worst:.3}")))
}

fn c5_rates() -> Outcome {
    let times = dyadic_times(6, 12);
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [1, 2] {
        for s in [0.5, 1.0] {
            let s = order(s);
            let acc = if d == 2 && !s.is_local() { Accuracy::SelfSimilarTorus(1.0) } else { Accuracy::PeakRelative(1e-4) };
            let mut e1 = vec![0i64; d];
            e1[0] = 1;
            let u0 = LatticeField::delta(d, &e1, 0).map_err(err)?;
            let reports = rate_sweeps(&u0, s, &[1.0, 2.0, f64::INFINITY], &times, acc).map_err(err)?;
            let want = -1.0 / (2.0 * s.value());
            for (p, r) in ["1", "2", "inf"].iter().zip(&reports) {
                let hit = (r.slope - want).abs() <= 0.05;
                ok &= hit;
                parts.push(format!("d{d} s{} p{p}: {:.3}", s.value(), r.slope));
            }
        }
    }
    Ok((ok, format!("slopes vs -1/(2s) +- 0.05: {}", parts.join(", "))))
}

fn c6_sharpness() -> Outcome {
    let t = 4096.0;
    let a = optimality_constant(t, FracOrder::ONE, 1, f64::INFINITY, 1e-4).map_err(err)?;
    let a_ref = common::gaussian_derivative_sup();
    let b = optimality_constant(t, order(0.5), 1, 1.0, 1e-4).map_err(err)?;
    let b_ref = common::cauchy_derivative_l1();
    let (ea, eb) = ((a / a_ref - 1.0).abs(), (b / b_ref - 1.0).abs());
    Ok((
        ea < 0.02 && eb < 0.02,
        format!("(1,1,inf): {a:.5} vs {a_ref:.5} ({:.2}%), (1,0.5,1): {b:.5} vs {b_ref:.5} ({:.2}%)", 100.0 * ea, 100.0 * eb),
    ))
}

fn c7_scaling_limit() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, s, tol) in [(1, 1.0, 1e-10), (1, 0.5, 1e-10), (2, 1.0, 1e-10)] {
        let ev = StableProfileEvaluator::new(order(s), d, tol).map_err(err)?;
        let probe = ScalingLimitProbe::new(&ev, 2.0);
        let errs: Vec<f64> = [6, 8, 10, 12]
            .iter()
            .map(|&e| probe.error_at(2f64.powi(e), 1e-4))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let strict = errs.windows(2).all(|w| w[1] < w[0]);
        let small = errs[3] < 0.02 * ev.phi0();
        ok &= strict && small;
        parts.push(format!(
            "(d{d}, s{s}): [{}] final/phi0 = {:.4}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", "),
            errs[3] / ev.phi0()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c8_heavy_tail() -> Outcome {
    let (u0, cut) = heavy_tail_datum(1, 2000).map_err(err)?;
    let times = dyadic_times(4, 12);
    let chk = no_moment_convergence_check(&u0, FracOrder::ONE, &times, Accuracy::PeakRelative(1e-6)).map_err(err)?;
    Ok((
        chk.final_ratio < 0.25,
        format!(
            "l1 error {:.3e} -> {:.3e}, ratio {:.3} (< 0.25), monotone {}, truncated mass {cut:.1e}",
            chk.l1_errors[0],
            chk.l1_errors[times.len() - 1],
            chk.final_ratio,
            chk.monotone
        ),
    ))
}

fn c9_counterexample() -> Outcome {
    let phi = |t: f64| t.powf(-0.25);
    let sd = build_slow_datum(phi, FracOrder::ONE, 1, 4).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 1..=4 {
        let b = verify_slow_bound(&sd, k, phi).map_err(err)?;
        ok &= b.pass;
        parts.push(format!("k{k}: {:.3e} >= {:.3e}", b.lhs, b.rhs));
    }
    Ok((ok, format!("T* = {}, {}", sd.t_star, parts.join(", "))))
}

fn test_graphs() -> Vec<(&'static str, WeightedGraph, Vec<usize>)> {
    let gb = WeightedGraph::grid_box(5);
    let ob = (1..4).flat_map(|i| (1..4).map(move |j| i * 5 + j)).collect();
    vec![
        ("P5/mid3", WeightedGraph::path(5), vec![1, 2, 3]),
        ("C6/arc3", WeightedGraph::cycle(6), vec![0, 1, 2]),
        ("box5/int3", gb, ob),
    ]
}

fn c10_dirichlet_spectrum() -> Outcome {
    let mut worst_eig = 0.0f64;
    for n in [3usize, 5] {
        let g = WeightedGraph::path(n + 2);
        let op = dirichlet_operator(&g, &(1..=n).collect::<Vec<_>>(), FracOrder::ONE).map_err(err)?;
        let spec = spectral_solve(&op).map_err(err)?;
        for (a, b) in spec.eigenvalues.iter().zip(common::path_dirichlet_eigenvalues(n)) {
            worst_eig = worst_eig.max((a - b).abs());
        }
    }
    let mut worst_route = 0.0f64;
    for g in [WeightedGraph::path(5), WeightedGraph::cycle(6)] {
        for s in [0.3, 0.5, 0.7] {
            let a = frac_power_spectral(&g, order(s)).map_err(err)?;
            let b = frac_power_bochner(&g, order(s), 1e-10).map_err(err)?;
            worst_route = worst_route.max((&a - &b).amax());
        }
    }
    Ok((
        worst_eig < 1e-10 && worst_route < 1e-8,
        format!("eigenvalue error {worst_eig:.2e} (tol 1e-10), Bochner vs spectral {worst_route:.2e} (tol 1e-8)"),
    ))
}

fn c11_first_mode() -> Outcome {
    let op = dirichlet_operator(&WeightedGraph::path(5), &[1, 2, 3], FracOrder::ONE).map_err(err)?;
    let spec = spectral_solve(&op).map_err(err)?;
    let (mu1, mu2) = (spec.eigenvalues[0], spec.eigenvalues[1]);
    let times: Vec<f64> = (0..10).map(|k| 6.0 + 2.0 * k as f64).collect();
    let generic = [1.0, 0.2, -0.5];
    let r = first_mode_report(&op, &spec, &generic, 2.0, &times).map_err(err)?;
    let ren = r.renormalized.clone().ok_or("renormalized report missing")?;
    let psi1 = spec.mode(0);
    let c = op.inner(&generic, &psi1);
    let orth: Vec<f64> = generic.iter().zip(&psi1).map(|(u, p)| u - c * p).collect();
    let ro = first_mode_report(&op, &spec, &orth, 2.0, &times).map_err(err)?;
    let sweep: Vec<f64> = (1..=10).map(|k| k as f64 * 0.7).collect();
    let rl = first_mode_report(&op, &spec, &generic, 2.0, &sweep).map_err(err)?;
    let e1 = (r.remainder.slope / -mu2 - 1.0).abs();
    let e2 = (ren.slope / -(mu2 - mu1) - 1.0).abs();
    let e3 = (ro.remainder.slope / -mu2 - 1.0).abs();
    let l2 = r.l2_ratio_max.max(rl.l2_ratio_max);
    Ok((
        e1 < 0.01 && e2 < 0.01 && e3 < 0.01 && l2 <= 1.0 + 1e-10,
        format!(
            "generic {:.4} vs {:.4}, renormalized {:.4} vs {:.4}, orthogonal {:.4}, l2 ratio {l2:.6}",
            r.remainder.slope,
            -mu2,
            ren.slope,
            -(mu2 - mu1),
            ro.remainder.slope
        ),
    ))
}

fn c12_positivity(grid: &Result<GridStats, String>) -> Outcome {
    let g = grid.as_ref().map_err(|e| e.clone())?;
    let mut ok = g.min_value > 0.0;
    let mut min_entry = f64::INFINITY;
    let mut complete = true;
    for (_, graph, omega) in test_graphs() {
        for s in [0.5, 1.0] {
            let op = dirichlet_operator(&graph, &omega, order(s)).map_err(err)?;
            let rep = positivity_improving_check(&op, &[0.01, 1.0, 10.0]);
            ok &= rep.positive && rep.metzler && rep.irreducible;
            min_entry = min_entry.min(rep.min_entry);
            if s < 1.0 {
                complete &= rep.complete_pattern;
            }
        }
    }
    ok &= complete;
    Ok((
        ok,
        format!("min kernel value {:.3e}, min exp entry {min_entry:.3e}, s<1 off-diagonals negative {complete}", g.min_value),
    ))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match out {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("criterion {n:>2} {}: {name}: {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" });
    };
    report(1, "kernel vs Bessel", &c1_bessel);
    report(2, "kernel vs subordination", &c2_subordination);
    let start = Instant::now();
    let grid = kernel_grid();
    println!("kernel grid synthesized [{:.1}s]", start.elapsed().as_secs_f64());
    report(3, "mass and positivity", &|| c3_mass(&grid));
    report(4, "operator bounds", &c4_operator_bounds);
    report(5, "first-order exponent", &c5_rates);
    report(6, "sharpness constant", &c6_sharpness);
    report(7, "scaling limit", &c7_scaling_limit);
    report(8, "heavy-tail convergence", &c8_heavy_tail);
    report(9, "slow datum", &c9_counterexample);
    report(10, "Dirichlet spectrum", &c10_dirichlet_spectrum);
    report(11, "first-mode exponents", &c11_first_mode);
    report(12, "positivity", &|| c12_positivity(&grid));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
