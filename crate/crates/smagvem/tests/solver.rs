use approx::assert_relative_eq;
use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smagvem::core::assembly::{Physics, Smagorinsky};
use smagvem::core::mesh::MeshFamily;
use smagvem::linsolve::{linear_solve, residual};
use smagvem::newton::{continuation_ramp, newton_solve, InitialGuess, NewtonConfig, Outcome};
use smagvem::problem::{cavity_setup, Problem};

fn dense_solve(n: usize, triplets: &[(usize, usize, f64)], b: &[f64]) -> Vec<f64> {
    let mut a = Mat::<f64>::zeros(n, n);
    for &(r, c, v) in triplets {
        a[(r, c)] += v;
    }
    let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    let x = a.partial_piv_lu().solve(&rhs);
    (0..n).map(|i| x[(i, 0)]).collect()
}

#[test]
fn sparse_solve_matches_dense_on_small_mesh() {
    let mesh = MeshFamily::usm(2).build().unwrap();
    let pb = cavity_setup(100.0, mesh, 2, Some(Smagorinsky::default())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = pb.boundary_state().unwrap();
    let shift: Vec<f64> = (0..pb.n_unknowns()).map(|_| rng.random_range(-0.5..0.5)).collect();
    pb.disc.update(&mut state, &shift, 1.0);
    let sys = pb.assemble(&state, &pb.physics, true).unwrap();
    let b: Vec<f64> = sys.residual.iter().map(|r| -r).collect();
    let x = linear_solve(&sys).unwrap();
    let y = dense_solve(sys.n, &sys.triplets, &b);
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for (a, b) in x.iter().zip(&y) {
        assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
    }
    let r = residual(&sys.triplets, &x, &b);
    assert!(r.iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn newton_converges_quadratically_at_low_reynolds() {
    let mesh = MeshFamily::usm(8).build().unwrap();
    let mut pb = cavity_setup(100.0, mesh, 2, Some(Smagorinsky::default())).unwrap();
    let (state, trace) = newton_solve(&mut pb, &NewtonConfig::default(), None).unwrap();
    assert_eq!(trace.outcome, Outcome::Converged, "{:?}", trace.residuals);
    assert!(trace.iterations() <= 8);
    let r = &trace.residuals;
    // last contraction is at least quadratic-looking
    let n = r.len();
    assert!(r[n - 1] <= r[n - 2] * r[n - 2] * 1e3 || r[n - 1] <= 1e-10);
    assert!(pb.disc.pressure_mean(&state).abs() <= 1e-10);
}

#[test]
fn lid_prescribes_all_top_nodes_including_corners() {
    let mesh = MeshFamily::usm(4).build().unwrap();
    let pb = cavity_setup(100.0, mesh, 2, None).unwrap();
    let state = pb.boundary_state().unwrap();
    let d = &pb.disc.dofs;
    let mut lid = 0;
    for (i, site) in d.sites.iter().enumerate() {
        if let (true, Some((p, 0))) = (d.dirichlet[i], site) {
            if p.y == 1.0 {
                assert_eq!(state.velocity[i], 1.0);
                lid += 1;
            }
        }
    }
    // 5 vertices and 4 interior Gauss-Lobatto points along the top side
    assert_eq!(lid, 9);
}

#[test]
fn continuation_reaches_target_and_reports_each_step() {
    let mesh = MeshFamily::usm(6).build().unwrap();
    let mut pb = cavity_setup(100.0, mesh, 2, Some(Smagorinsky::default())).unwrap();
    let (state, traces) = continuation_ramp(&mut pb, &[100.0, 400.0, 1000.0], &NewtonConfig::default()).unwrap();
    assert_eq!(traces.len(), 3);
    assert!(traces.iter().all(|(_, t)| t.converged()));
    assert_eq!(pb.re(), 1000.0);
    assert!(pb.residual_norm(&state).unwrap() <= 1e-10);

    let cfg = NewtonConfig {
        initial_guess: InitialGuess::Continuation,
        re_ramp: Some(vec![100.0, 400.0]),
        ..NewtonConfig::default()
    };
    let mesh = MeshFamily::usm(6).build().unwrap();
    let mut pb2 = cavity_setup(1000.0, mesh, 2, Some(Smagorinsky::default())).unwrap();
    let (s2, t2) = newton_solve(&mut pb2, &cfg, None).unwrap();
    assert!(t2.converged());
    for (a, b) in s2.velocity.iter().zip(&state.velocity) {
        assert_relative_eq!(a, b, epsilon = 1e-9);
    }
}

#[test]
fn smagorinsky_jacobian_matches_directional_derivative() {
    let mesh = MeshFamily::usm(2).build().unwrap();
    let physics = Physics { nu: 0.01, convection: false, smagorinsky: Some(Smagorinsky::default()) };
    let pb = Problem::new(mesh, 3, physics).unwrap();
    let n = pb.n_unknowns();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut state = pb.boundary_state().unwrap();
    let shift: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    pb.disc.update(&mut state, &shift, 1.0);
    let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let sys = pb.assemble(&state, &pb.physics, true).unwrap();
    let mut jv = vec![0.0; n];
    for &(r, c, v) in &sys.triplets {
        jv[r] += v * dir[c];
    }
    let h = 1e-6;
    let (mut plus, mut minus) = (state.clone(), state.clone());
    pb.disc.update(&mut plus, &dir, h);
    pb.disc.update(&mut minus, &dir, -h);
    let rp = pb.assemble(&plus, &pb.physics, false).unwrap().residual;
    let rm = pb.assemble(&minus, &pb.physics, false).unwrap().residual;
    let scale = jv.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        let fd = (rp[i] - rm[i]) / (2.0 * h);
        assert!((fd - jv[i]).abs() <= 1e-7 * scale, "row {i}: {fd} vs {}", jv[i]);
    }
}
