//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the verdicts are always printed. A
//! failing criterion is reported, not raised; the process exits non-zero only
//! if the suite itself cannot run. Set `ACCEPTANCE_ONLY=1,4` to run a subset.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smagvem::core::assembly::{DiscreteState, EddyScaling, Smagorinsky};
use smagvem::core::basis::{dim, MonomialBasis};
use smagvem::core::cases::ManufacturedCase;
use smagvem::core::mesh::{MeshFamily, MeshKind};
use smagvem::core::vem::ElementOperators;
use smagvem::core::Point2;
use smagvem::newton::{newton_solve, InitialGuess, NewtonConfig};
use smagvem::problem::{cavity_setup, Problem};
use smagvem::reference::{bundled_profiles, find_profile, ReferenceProfile, ReferenceSource};
use smagvem::verification::{
    cavity_mesh, convergence_study, divergence_defect, manufactured_config, reference_error, smagorinsky_with,
    CavityLevel,
};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Divergence defects of every converged run, checked by criterion 3.
#[derive(Default)]
struct DivergenceLog {
    runs: Vec<(String, f64)>,
}

impl DivergenceLog {
    fn record(&mut self, label: impl Into<String>, problem: &Problem, state: &DiscreteState) {
        self.runs.push((label.into(), divergence_defect(problem, state)));
    }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn fmt_rates(r: &[Option<f64>]) -> String {
    r.iter().map(|v| v.map_or("-".to_string(), |x| format!("{x:.3}"))).collect::<Vec<_>>().join("/")
}

fn criterion_1(log: &mut DivergenceLog) -> smagvem::Result<Verdict> {
    const PUBLISHED_GRAD: [f64; 3] = [7.3571e-3, 1.7860e-3, 4.8040e-4];
    const PUBLISHED_L2: [f64; 3] = [4.3530e-4, 4.1754e-5, 5.7269e-6];
    const PUBLISHED_P: [f64; 3] = [3.8144e-5, 6.5666e-6, 1.7309e-6];
    let start = Instant::now();
    let case = ManufacturedCase::p2p1(1e4);
    let cfg = manufactured_config(&case, &NewtonConfig::default());
    let reports = convergence_study(case, MeshKind::Usm, &[10, 20, 40], 2, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    for r in &reports {
        log.runs.push((format!("p2p1 N={}", r.n), r.divergence));
    }
    let rates_ok = reports[1..].iter().all(|r| {
        within(r.rates[0].unwrap_or(f64::NAN), 1.75, 2.25)
            && within(r.rates[1].unwrap_or(f64::NAN), 2.5, 3.5)
            && within(r.rates[2].unwrap_or(f64::NAN), 1.4, 2.6)
    });
    let ratio_ok = reports.iter().enumerate().all(|(i, r)| {
        [r.norms.grad / PUBLISHED_GRAD[i], r.norms.l2 / PUBLISHED_L2[i], r.norms.pressure / PUBLISHED_P[i]]
            .iter()
            .all(|&q| within(q, 0.5, 2.0))
    });
    let grad: Vec<String> = reports.iter().map(|r| format!("{:.3e}", r.norms.grad)).collect();
    let l2: Vec<String> = reports.iter().map(|r| format!("{:.3e}", r.norms.l2)).collect();
    let p: Vec<String> = reports.iter().map(|r| format!("{:.3e}", r.norms.pressure)).collect();
    let rates = |c: usize| fmt_rates(&reports[1..].iter().map(|r| r.rates[c]).collect::<Vec<_>>());
    Ok(Verdict::new(
        rates_ok && ratio_ok && secs <= 300.0,
        format!(
            "grad [{}] rates {}; l2 [{}] rates {}; p [{}] rates {}; rates in band: {rates_ok}; \
             within 2x of reference values: {ratio_ok}; {secs:.0} s",
            grad.join(", "),
            rates(0),
            l2.join(", "),
            rates(1),
            p.join(", "),
            rates(2)
        ),
    ))
}

fn criterion_2(log: &mut DivergenceLog) -> smagvem::Result<Verdict> {
    let case = ManufacturedCase::irrotational(10.0);
    let mut vel_max: f64 = 0.0;
    let mut notes = Vec::new();
    let mut pass = true;
    for (k, ns) in [(2usize, &[10usize, 20, 40][..]), (3, &[10, 20, 40][..]), (4, &[10, 20][..])] {
        // The discrete solution is exact after one step; on the finer levels
        // rounding keeps the residual norm between 1e-10 and 4e-9.
        let cfg = NewtonConfig { epsilon: 1e-8, ..NewtonConfig::default() };
        let reports = convergence_study(case, MeshKind::Usm, ns, k, &cfg)?;
        for r in &reports {
            vel_max = vel_max.max(r.norms.grad).max(r.norms.l2);
            log.runs.push((format!("irrotational k={k} N={}", r.n), r.divergence));
        }
        let pressures: Vec<String> = reports.iter().map(|r| format!("{:.3e}", r.norms.pressure)).collect();
        if k < 4 {
            let ok = reports[1..].iter().all(|r| within(r.rates[2].unwrap_or(f64::NAN), k as f64 - 0.2, k as f64 + 0.2));
            pass &= ok;
            let rates = fmt_rates(&reports[1..].iter().map(|r| r.rates[2]).collect::<Vec<_>>());
            notes.push(format!("k={k} p [{}] rates {rates}", pressures.join(", ")));
        } else {
            let worst = reports.iter().map(|r| r.norms.pressure).fold(0.0, f64::max);
            pass &= worst <= 1e-8;
            notes.push(format!("k=4 p max {worst:.2e}"));
        }
    }
    pass &= vel_max <= 1e-10;
    Ok(Verdict::new(pass, format!("velocity max {vel_max:.2e}; {}", notes.join("; "))))
}

fn criterion_3(log: &DivergenceLog) -> Verdict {
    if log.runs.is_empty() {
        return Verdict::new(false, "no converged runs recorded");
    }
    let (label, worst) = log.runs.iter().fold((String::new(), 0.0), |acc, (l, v)| if *v > acc.1 { (l.clone(), *v) } else { acc });
    Verdict::new(
        worst <= 1e-10,
        format!("{} converged runs, worst max_T ||div u_h|| / (1 + |u_h|) = {worst:.2e} ({label})", log.runs.len()),
    )
}

fn shapes() -> Vec<(&'static str, Vec<Point2>)> {
    let p = Point2::new;
    vec![
        ("square", vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]),
        ("rectangle", vec![p(0.1, 0.2), p(0.4, 0.2), p(0.4, 0.4), p(0.1, 0.4)]),
        ("stretched rectangle", vec![p(0.0, 0.0), p(0.4, 0.0), p(0.4, 0.05), p(0.0, 0.05)]),
        ("hanging-node pentagon", vec![p(0.25, 0.5), p(0.375, 0.5), p(0.5, 0.5), p(0.5, 0.75), p(0.25, 0.75)]),
        ("small hanging-node pentagon", vec![p(0.0, 0.0), p(0.125, 0.0), p(0.125, 0.0625), p(0.125, 0.125), p(0.0, 0.125)]),
    ]
}

fn poly_field(basis: &MonomialBasis, c: &[f64], x: Point2) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = basis.len();
    let (v, g) = (basis.eval(x), basis.grad(x));
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for a in 0..2 {
        for i in 0..n {
            val[a] += c[a * n + i] * v[i];
            grad[a][0] += c[a * n + i] * g[i][0];
            grad[a][1] += c[a * n + i] * g[i][1];
        }
    }
    (val, grad)
}

/// Reproduction is measured on function values at the cell quadrature
/// points (gradients scaled by the diameter), and `Stab p` relative to
/// `‖Stab‖_∞ ‖dofs(p)‖_∞`, since moment DoFs scale with powers of the size.
fn criterion_4() -> smagvem::Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_proj, mut worst_stab): (f64, f64) = (0.0, 0.0);
    let mut kernel_ok = true;
    for (name, pts) in shapes() {
        for k in 2..=4 {
            let ops = ElementOperators::new(&pts, k)?;
            let nk = dim(k);
            for _ in 0..3 {
                let c: Vec<f64> = (0..2 * nk).map(|_| rng.random_range(-1.0..1.0)).collect();
                let basis = ops.basis;
                let dofs = ops.interpolate_dofs(|x| poly_field(&basis, &c, x).0, |x| poly_field(&basis, &c, x).1);
                let pn = ops.apply(&ops.pi_nabla, &dofs);
                let p0 = ops.apply(&ops.pi_zero, &dofs);
                let pg = ops.apply(&ops.pi_zero_grad, &dofs);
                for &x in &ops.rule.points {
                    let (v, g) = poly_field(&basis, &c, x);
                    let (a, b, t) = (ops.eval_vector(&pn, x), ops.eval_vector(&p0, x), ops.eval_tensor(&pg, x));
                    for i in 0..2 {
                        worst_proj = worst_proj.max((a[i] - v[i]).abs()).max((b[i] - v[i]).abs());
                        for j in 0..2 {
                            worst_proj = worst_proj.max((t[i][j] - g[i][j]).abs() * ops.diameter);
                        }
                    }
                }
                let row_sum = (0..ops.stab.nrows()).map(|i| ops.stab.row(i).abs().sum()).fold(0.0, f64::max);
                let dmax = dofs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let sp = ops.apply(&ops.stab, &dofs).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                worst_stab = worst_stab.max(sp / (row_sum * dmax));
            }
            let eig = ops.stab.clone().symmetric_eigen();
            let max = eig.eigenvalues.amax().max(1.0);
            let kernel = eig.eigenvalues.iter().filter(|l| l.abs() < 1e-11 * max).count();
            if kernel != 2 * nk {
                kernel_ok = false;
                eprintln!("  {name} k={k}: stabilization kernel {kernel}, expected {}", 2 * nk);
            }
        }
    }
    Ok(Verdict::new(
        worst_proj <= 1e-11 && worst_stab <= 1e-11 && kernel_ok,
        format!(
            "{} shapes, k = 2..4: max projector defect {worst_proj:.2e}, max relative Stab(p) {worst_stab:.2e}, \
             kernel dimension 2 dim P_k: {kernel_ok}",
            shapes().len()
        ),
    ))
}

fn criterion_5() -> smagvem::Result<Verdict> {
    let mesh = MeshFamily::usm(3).build()?;
    let problem = cavity_setup(100.0, mesh, 2, Some(Smagorinsky::default()))?;
    let n = problem.n_unknowns();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut state = problem.boundary_state()?;
    let shift: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    problem.disc.update(&mut state, &shift, 1.0);

    let sys = problem.assemble(&state, &problem.physics, true)?;
    let mut jac = vec![0.0; n * n];
    for &(r, c, v) in &sys.triplets {
        jac[r * n + c] += v;
    }
    let jmax = jac.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let step = 1e-6;
    let mut worst: f64 = 0.0;
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let (mut plus, mut minus) = (state.clone(), state.clone());
        problem.disc.update(&mut plus, &e, step);
        problem.disc.update(&mut minus, &e, -step);
        let rp = problem.assemble(&plus, &problem.physics, false)?.residual;
        let rm = problem.assemble(&minus, &problem.physics, false)?.residual;
        for i in 0..n {
            let fd = (rp[i] - rm[i]) / (2.0 * step);
            worst = worst.max((fd - jac[i * n + j]).abs() / jmax);
        }
        e[j] = 0.0;
    }

    // At a state with vanishing gradient the guarded derivative stays finite.
    let still = problem.disc.zero_state();
    let finite = problem.assemble(&still, &problem.physics, true)?.triplets.iter().all(|t| t.2.is_finite());
    Ok(Verdict::new(
        worst <= 1e-6 && finite,
        format!("{n} unknowns, max |J - J_fd| / max |J| = {worst:.2e}; finite at zero gradient: {finite}"),
    ))
}

fn converged_ladder(
    problem: &mut Problem,
    ladder: &[f64],
    mut visit: impl FnMut(f64, &Problem, &DiscreteState) -> smagvem::Result<()>,
) -> smagvem::Result<Vec<f64>> {
    let mut done = Vec::new();
    let mut state: Option<DiscreteState> = None;
    for &re in ladder {
        problem.set_re(re);
        let guess = if state.is_some() { InitialGuess::Supplied } else { InitialGuess::Stokes };
        let cfg = NewtonConfig { initial_guess: guess, ..NewtonConfig::default() };
        let (s, trace) = newton_solve(problem, &cfg, state.take())?;
        if !trace.converged() {
            break;
        }
        visit(re, problem, &s)?;
        done.push(re);
        state = Some(s);
    }
    Ok(done)
}

fn erturk(profiles: &[ReferenceProfile], re: f64) -> smagvem::Result<&ReferenceProfile> {
    find_profile(profiles, ReferenceSource::Erturk, re)
}

fn criterion_6(log: &mut DivergenceLog) -> smagvem::Result<Verdict> {
    let profiles = bundled_profiles()?;
    let ladder = [100.0, 400.0, 1000.0, 2000.0, 2500.0, 3000.0, 4000.0, 5000.0];
    let compared = [1000.0, 2500.0, 5000.0];
    let mut errors = Vec::new();
    let mut slowest: f64 = 0.0;
    for kind in [MeshKind::Imh, MeshKind::Usm] {
        let mesh = cavity_mesh(kind, CavityLevel::Fine).build()?;
        let mut problem = cavity_setup(ladder[0], mesh, 2, Some(Smagorinsky::default()))?;
        let mut errs = Vec::new();
        let mut last = Instant::now();
        converged_ladder(&mut problem, &ladder, |re, pb, s| {
            slowest = slowest.max(last.elapsed().as_secs_f64());
            last = Instant::now();
            log.record(format!("cavity fine {kind:?} Re={re}"), pb, s);
            if compared.contains(&re) {
                errs.push((re, reference_error(pb, s, erturk(&profiles, re)?)?));
            }
            Ok(())
        })?;
        errors.push(errs);
    }
    let get = |m: usize, re: f64| errors[m].iter().find(|e| e.0 == re).map(|e| e.1);
    let e1000 = get(0, 1000.0);
    let e5000 = get(0, 5000.0);
    let band_ok = e1000.is_some_and(|e| within(e, 0.02, 0.09)) && e5000.is_some_and(|e| within(e, 0.035, 0.14));
    let mut order_ok = true;
    let mut pairs = Vec::new();
    for re in compared {
        if let (Some(i), Some(u)) = (get(0, re), get(1, re)) {
            order_ok &= i < u;
            pairs.push(format!("Re {re}: IMH {i:.3e} vs USM {u:.3e}"));
        } else {
            pairs.push(format!("Re {re}: IMH {:?} USM {:?}", get(0, re), get(1, re)));
        }
    }
    Ok(Verdict::new(
        band_ok && order_ok && slowest <= 1800.0,
        format!("{}; bands: {band_ok}; IMH below USM: {order_ok}; slowest step {slowest:.0} s", pairs.join("; ")),
    ))
}

fn criterion_7(log: &mut DivergenceLog) -> smagvem::Result<Verdict> {
    let tested = [2000.0, 5000.0, 6900.0, 10000.0];
    let mut sets: Vec<BTreeSet<u64>> = Vec::new();
    for kind in [MeshKind::Imh, MeshKind::Usm, MeshKind::Arm] {
        let mut ok = BTreeSet::new();
        for re in tested {
            let mesh = cavity_mesh(kind, CavityLevel::Coarse).build()?;
            let mut problem = cavity_setup(re, mesh, 2, Some(Smagorinsky::default()))?;
            let converged = match newton_solve(&mut problem, &NewtonConfig::default(), None) {
                Ok((s, t)) if t.converged() => {
                    log.record(format!("cavity coarse {kind:?} Re={re} (Stokes guess)"), &problem, &s);
                    true
                }
                _ => false,
            };
            if converged {
                ok.insert(re as u64);
            }
        }
        sets.push(ok);
    }
    let (imh, usm, arm) = (&sets[0], &sets[1], &sets[2]);
    let primary = imh.contains(&2000) && usm.contains(&2000) && !arm.contains(&2000) && imh.contains(&6900) && !usm.contains(&6900);
    let fallback = imh.len() > usm.len() && usm.len() > arm.len();
    Ok(Verdict::new(
        primary || fallback,
        format!("converged Re with Stokes guess: IMH {imh:?}, USM {usm:?}, ARM {arm:?}; primary rule {primary}, set rule {fallback}"),
    ))
}

fn criterion_8(log: &mut DivergenceLog) -> smagvem::Result<Verdict> {
    let profiles = bundled_profiles()?;
    let ladder = [100.0, 400.0, 1000.0];
    let mut pass = true;
    let mut compared = 0;
    let mut notes = Vec::new();
    for level in [CavityLevel::Coarse, CavityLevel::Medium] {
        let mut by_scaling = Vec::new();
        for scaling in [EddyScaling::MinFace, EddyScaling::CellDiameter] {
            let mesh = cavity_mesh(MeshKind::Arm, level).build()?;
            let mut problem = cavity_setup(ladder[0], mesh, 2, Some(smagorinsky_with(scaling)))?;
            let mut errs = Vec::new();
            converged_ladder(&mut problem, &ladder, |re, pb, s| {
                log.record(format!("cavity {} ARM {scaling:?} Re={re}", level.as_str()), pb, s);
                let mut refs = vec![find_profile(&profiles, ReferenceSource::Ghia, re)?];
                if let Ok(e) = erturk(&profiles, re) {
                    refs.push(e);
                }
                for r in refs {
                    errs.push((re, r.source, reference_error(pb, s, r)?));
                }
                Ok(())
            })?;
            by_scaling.push(errs);
        }
        for (re, src, ef) in &by_scaling[0] {
            if let Some((_, _, et)) = by_scaling[1].iter().find(|(r, s, _)| r == re && s == src) {
                compared += 1;
                pass &= ef <= et;
                notes.push(format!("{} Re {re} {src}: {ef:.3e} vs {et:.3e}", level.as_str()));
            }
        }
    }
    Ok(Verdict::new(
        pass && compared > 0,
        format!("h*_F vs h_T, {compared} comparisons: {}", notes.join("; ")),
    ))
}

fn criterion_9() -> smagvem::Result<Verdict> {
    let smag = Smagorinsky::default();
    let mut means = Vec::new();
    let mut worst: f64 = 0.0;
    for n in [4usize, 8, 16] {
        let mesh = MeshFamily::usm(n).build()?;
        let problem = Problem::new(mesh, 2, smagvem::core::assembly::Physics::navier_stokes(1.0))?;
        let mut state = problem.disc.zero_state();
        state.velocity = problem.disc.interpolate(|p| [-p.y, p.x], |_| [[0.0, -1.0], [1.0, 0.0]]);
        let nu = problem.disc.eddy_viscosity(&state, &smag);
        for (c, v) in nu.iter().enumerate() {
            let h = problem.mesh.cells[c].diameter;
            let expected = smag.cs * smag.cs * h * h * 2f64.sqrt();
            worst = worst.max((v - expected).abs() / expected);
        }
        means.push(nu.iter().sum::<f64>() / nu.len() as f64);
    }
    let ratios: Vec<f64> = means.windows(2).map(|w| w[1] / w[0]).collect();
    let ratio_ok = ratios.iter().all(|r| (r - 0.25).abs() <= 1e-14);
    Ok(Verdict::new(
        worst <= 1e-14 && ratio_ok,
        format!("max relative deviation from C_S^2 h_T^2 sqrt(2): {worst:.2e}; halving ratios {ratios:?}"),
    ))
}

const NAMES: [&str; 9] = [
    "P2P1 convergence at Re = 10000",
    "irrotational test",
    "discrete divergence",
    "projector and stabilization suite",
    "Newton Jacobian against finite differences",
    "cavity accuracy on fine meshes",
    "Newton robustness ordering across mesh families",
    "anisotropic eddy-viscosity scaling on ARM",
    "eddy-viscosity scaling law",
];

fn main() {
    // libtest flags such as `--nocapture` or filters are accepted and ignored.
    let only: Option<BTreeSet<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |i: usize| only.as_ref().is_none_or(|s| s.contains(&i));
    let mut log = DivergenceLog::default();
    let mut verdicts: Vec<(usize, Verdict)> = Vec::new();
    let suite = Instant::now();
    for id in [4, 5, 9, 2, 1, 6, 7, 8] {
        if !wanted(id) {
            continue;
        }
        let start = Instant::now();
        let result = match id {
            1 => criterion_1(&mut log),
            2 => criterion_2(&mut log),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(&mut log),
            7 => criterion_7(&mut log),
            8 => criterion_8(&mut log),
            9 => criterion_9(),
            _ => unreachable!(),
        };
        let v = result.unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        eprintln!("  criterion {id} finished in {:.1} s", start.elapsed().as_secs_f64());
        verdicts.push((id, v));
    }
    if wanted(3) {
        verdicts.push((3, criterion_3(&log)));
    }
    verdicts.sort_by_key(|(id, _)| *id);
    println!();
    for (id, v) in &verdicts {
        println!("criterion {id}: {} {}: {}", if v.pass { "PASS" } else { "FAIL" }, NAMES[id - 1], v.detail);
    }
    let passed = verdicts.iter().filter(|(_, v)| v.pass).count();
    println!("acceptance: {passed}/{} criteria passed in {:.0} s", verdicts.len(), suite.elapsed().as_secs_f64());
}
