use dualcm::problem::ProblemSpec;
use dualcm::solver::{
    continuation, homogeneous_solve, linearize, newton_solve, residual, ContinuationOptions,
    HomogeneousOptions, NewtonOptions, Problem, ResidualForm,
};
use dualcm::sphere::SphereGrid;
use dualcm::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FORMS: [ResidualForm; 3] = [
    ResidualForm::Raw,
    ResidualForm::Normalized,
    ResidualForm::Log,
];

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn constant_problem(spec: ProblemSpec, grid: SphereGrid, phi0: f64) -> Problem {
    let n = grid.len();
    Problem::new(spec, grid, vec![phi0; n]).unwrap()
}

#[test]
fn residual_vanishes_at_start_of_homotopy() {
    let spec = ProblemSpec::new(4, 2, 3, 1, 2.5, 1.5).unwrap();
    let grid = SphereGrid::axisym(4, 33).unwrap();
    let phi = grid.sample(|t, _| 2.0 + 0.3 * t.cos());
    let problem = Problem::new(spec, grid, phi).unwrap();
    for form in FORMS {
        let r = residual(&vec![1.0; problem.grid().len()], &problem, 0.0, form).unwrap();
        assert!(max_abs(&r) < 1e-12, "{form:?}: {}", max_abs(&r));
    }
}

#[test]
fn constant_solution_has_zero_residual() {
    let spec = ProblemSpec::new(3, 2, 2, 0, 4.0, 1.0).unwrap();
    let problem = constant_problem(spec, SphereGrid::axisym(3, 33).unwrap(), 12.0);
    let r = residual(&vec![1.0; 33], &problem, 1.0, ResidualForm::Raw).unwrap();
    assert!(max_abs(&r) < 1e-12);
}

#[test]
fn inadmissible_node_is_named() {
    let spec = ProblemSpec::new(3, 2, 2, 0, 4.0, 1.0).unwrap();
    let problem = constant_problem(spec, SphereGrid::axisym(3, 33).unwrap(), 12.0);
    let mut u = vec![1.0; 33];
    u[10] = 0.5;
    match residual(&u, &problem, 1.0, ResidualForm::Raw) {
        Err(Error::InadmissibleNode { node, margin }) => {
            assert_eq!(node, 9);
            assert!(margin <= 0.0);
        }
        other => panic!("expected an inadmissible node, got {other:?}"),
    }
}

fn random_admissible(grid: &SphereGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (a, b) = (rng.random_range(-0.1..0.1), rng.random_range(-0.05..0.05));
    let h2 = grid.spacing().powi(2);
    grid.sample(|t, p| 1.0 + a * t.cos() + b * t.sin() * p.cos() + 0.05 * (t.cos().powi(2)))
        .into_iter()
        .map(|v| v + 1e-3 * h2 * rng.random_range(-1.0..1.0))
        .collect()
}

/// Random combination of low-order modes with unit-scale coefficients.
fn random_direction(grid: &SphereGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    grid.sample(|t, p| {
        c[0] + c[1] * t.cos()
            + c[2] * (2.0 * t).cos()
            + c[3] * (3.0 * t).cos()
            + c[4] * t.sin() * p.cos()
            + c[5] * t.sin() * t.cos() * p.sin()
    })
}

#[test]
fn jacobian_matches_directional_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases = [
        (
            ProblemSpec::new(3, 2, 2, 0, 4.0, 1.0).unwrap(),
            SphereGrid::axisym(3, 25).unwrap(),
        ),
        (
            ProblemSpec::new(4, 2, 3, 1, 2.5, 3.0).unwrap(),
            SphereGrid::axisym(4, 25).unwrap(),
        ),
        (
            ProblemSpec::new(2, 2, 1, 0, 2.0, 0.5).unwrap(),
            SphereGrid::full_s2(10, 20).unwrap(),
        ),
        (
            ProblemSpec::new(2, 1, 2, 1, 3.0, 2.0).unwrap(),
            SphereGrid::full_s2(10, 20).unwrap(),
        ),
    ];
    for (spec, grid) in cases {
        let phi = grid.sample(|t, p| 3.0 + 0.2 * t.cos() + 0.1 * t.sin() * p.sin());
        let problem = Problem::new(spec, grid.clone(), phi).unwrap();
        for _ in 0..5 {
            let u = random_admissible(&grid, &mut rng);
            let v = random_direction(&grid, &mut rng);
            let t = rng.random_range(0.0..1.0);
            for form in FORMS {
                let lv = linearize(&u, &problem, t, form).unwrap().apply(&v);
                let h = 1e-6;
                let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
                let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
                let rp = residual(&up, &problem, t, form).unwrap();
                let rm = residual(&um, &problem, t, form).unwrap();
                let fd: Vec<f64> = rp
                    .iter()
                    .zip(&rm)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                let diff: Vec<f64> = fd.iter().zip(&lv).map(|(a, b)| a - b).collect();
                let rel = max_abs(&diff) / max_abs(&lv);
                assert!(rel < 1e-6, "{form:?}: relative error {rel:e}");
            }
        }
    }
}

#[test]
fn linearization_on_constants() {
    // at u ≡ 1 with φ ≡ c: L_u(1) = (q − l − p)/(k − l) · F̃(I)
    let spec = ProblemSpec::new(3, 2, 2, 1, 3.0, 1.5).unwrap();
    let c = spec.symmetric_constant();
    let expected = (spec.q() - 1.0 - spec.p()) / 1.0 * c;
    let problem = constant_problem(spec, SphereGrid::axisym(3, 17).unwrap(), c);
    let l = linearize(&[1.0; 17], &problem, 1.0, ResidualForm::Normalized).unwrap();
    for v in l.apply(&[1.0; 17]) {
        assert!(
            (v - expected).abs() < 1e-12 * expected.abs(),
            "{v} vs {expected}"
        );
    }
    assert!(expected < 0.0);
    assert!(max_abs(&l.apply(&[0.0; 17])) == 0.0);
}

#[test]
fn homogeneous_scale_invariance() {
    let spec = ProblemSpec::new(3, 2, 2, 1, 2.0, 3.0).unwrap();
    let grid = SphereGrid::axisym(3, 33).unwrap();
    let phi = grid.sample(|t, _| 2.0 + 0.1 * t.cos());
    let problem = Problem::new(spec, grid.clone(), phi).unwrap();
    let u = grid.sample(|t, _| 1.0 + 0.05 * t.cos() + 0.02 * t.cos().powi(2));
    let r_log = residual(&u, &problem, 1.0, ResidualForm::Log).unwrap();
    let r_norm = residual(&u, &problem, 1.0, ResidualForm::Normalized).unwrap();
    for c in [0.3, 2.0, 17.0] {
        let cu: Vec<f64> = u.iter().map(|v| c * v).collect();
        let s_log = residual(&cu, &problem, 1.0, ResidualForm::Log).unwrap();
        let s_norm = residual(&cu, &problem, 1.0, ResidualForm::Normalized).unwrap();
        for i in 0..u.len() {
            assert!((s_log[i] - r_log[i]).abs() < 1e-10);
            assert!((s_norm[i] - c * r_norm[i]).abs() < 1e-10 * c);
        }
    }
    // L_u(u) = R̃(u) for a degree-one homogeneous residual; zero at solutions
    let lu = linearize(&u, &problem, 1.0, ResidualForm::Normalized)
        .unwrap()
        .apply(&u);
    for (a, b) in lu.iter().zip(&r_norm) {
        assert!((a - b).abs() < 1e-9);
    }
    let c = problem.spec().symmetric_constant();
    let at_solution = constant_problem(problem.spec().clone(), grid, c);
    let ones = vec![1.0; 33];
    let l = linearize(&ones, &at_solution, 1.0, ResidualForm::Normalized).unwrap();
    assert!(max_abs(&l.apply(&ones)) < 1e-12);
}

#[test]
fn newton_examples() {
    let spec = ProblemSpec::new(3, 2, 2, 0, 4.0, 1.0).unwrap();
    let problem = constant_problem(spec, SphereGrid::axisym(3, 33).unwrap(), 12.0);
    let opts = NewtonOptions::default();
    let out = newton_solve(&vec![1.2; 33], &problem, 1.0, &opts).unwrap();
    assert!(out.x.iter().all(|v| (v - 1.0).abs() < 1e-10));
    assert!(out.iterations > 0);
    let out = newton_solve(&vec![1.0; 33], &problem, 1.0, &opts).unwrap();
    assert_eq!(out.iterations, 0);
    let mut bad = vec![1.0; 33];
    bad[3] = -1.0;
    assert!(matches!(
        newton_solve(&bad, &problem, 1.0, &opts),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn continuation_reaches_constant_solution() {
    for (spec, grid, phi0) in [
        (
            ProblemSpec::new(3, 2, 2, 0, 4.0, 1.0).unwrap(),
            SphereGrid::axisym(3, 33).unwrap(),
            5.0,
        ),
        (
            ProblemSpec::new(2, 2, 1, 0, 2.0, 0.5).unwrap(),
            SphereGrid::full_s2(12, 24).unwrap(),
            0.7,
        ),
    ] {
        let exact = spec.constant_solution(phi0).unwrap();
        let problem = constant_problem(spec, grid, phi0);
        let states = continuation(&problem, &ContinuationOptions::default()).unwrap();
        assert_eq!(states.first().unwrap().t, 0.0);
        let last = states.last().unwrap();
        assert_eq!(last.t, 1.0);
        assert!(last.field.u().iter().all(|v| (v - exact).abs() < 1e-8));
        assert!(states
            .iter()
            .all(|s| s.min_eig_a > 0.0 && s.min_margin > 0.0));
    }
}

#[test]
fn continuation_rejects_homogeneous_case() {
    let spec = ProblemSpec::new(3, 2, 2, 1, 2.0, 3.0).unwrap();
    let problem = constant_problem(spec, SphereGrid::axisym(3, 17).unwrap(), 1.0);
    assert!(matches!(
        continuation(&problem, &ContinuationOptions::default()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn homogeneous_constant_phi() {
    let spec = ProblemSpec::new(3, 2, 2, 1, 2.0, 3.0).unwrap();
    let c = spec.symmetric_constant();
    let phi0 = 0.8 * c;
    let problem = constant_problem(spec, SphereGrid::axisym(3, 33).unwrap(), phi0);
    let out = homogeneous_solve(&problem, &HomogeneousOptions::default()).unwrap();
    assert!((out.gamma * phi0 - c).abs() < 1e-8);
    assert!((out.gamma_limit * phi0 - c).abs() < 1e-8);
    assert!(out.field.u().iter().all(|v| (v - 1.0).abs() < 1e-8));
    for r in &out.records {
        assert!((r.gamma * phi0 - c).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn homogeneous_preconditions() {
    let spec = ProblemSpec::new(3, 2, 2, 1, 2.0, 3.0).unwrap();
    let problem = constant_problem(spec, SphereGrid::axisym(3, 17).unwrap(), 1.0);
    let opts = HomogeneousOptions {
        eps_list: vec![0.1, 0.2],
        ..HomogeneousOptions::default()
    };
    assert!(matches!(
        homogeneous_solve(&problem, &opts),
        Err(Error::Precondition(_))
    ));
    let spec = ProblemSpec::new(3, 2, 2, 0, 4.0, 1.0).unwrap();
    let problem = constant_problem(spec, SphereGrid::axisym(3, 17).unwrap(), 1.0);
    assert!(matches!(
        homogeneous_solve(&problem, &HomogeneousOptions::default()),
        Err(Error::Precondition(_))
    ));
}
