use radialis_core::{
    audit_eigenstate, mismatch, solve_state, spectrum, BoundaryPolicy, GridSpec, Potential,
    SolveRequest,
};

fn hydrogen(l: u32, spec: GridSpec) -> SolveRequest {
    let p = Potential::coulomb(1.0).unwrap();
    let grid = spec.build(&p, &BoundaryPolicy::Dirichlet, None).unwrap();
    SolveRequest::new(p, l, BoundaryPolicy::Dirichlet, grid, (-1.0, -1e-4))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Lowest root of `k cot(kR) = −κ` with `k = √(2(V_w + E))`, `κ = √(−2E)`,
/// by plain bisection on `E`.
fn finite_well_roots(depth: f64, radius: f64) -> Vec<f64> {
    let g = |e: f64| {
        let k = (2.0 * (depth + e)).sqrt();
        let kappa = (-2.0 * e).sqrt();
        k * (k * radius).cos() + kappa * (k * radius).sin()
    };
    // sin(kR) > 0 between consecutive zeros of cos avoids the cot poles
    let mut roots = Vec::new();
    let samples = 20000;
    let e = |i: usize| -depth + depth * i as f64 / samples as f64;
    for i in 0..samples {
        let (mut a, mut b) = (e(i).max(-depth + 1e-12), e(i + 1).min(-1e-12));
        if g(a).signum() == g(b).signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if g(mid).signum() == g(a).signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

#[test]
fn hydrogen_levels() {
    for l in 0..=2u32 {
        let states = spectrum(&hydrogen(l, GridSpec::default()), (4 - l) as usize).unwrap();
        assert_eq!(states.len(), (4 - l) as usize);
        for (k, s) in states.iter().enumerate() {
            let n = (k + l as usize + 1) as f64;
            let exact = -1.0 / (2.0 * n * n);
            assert!(rel(s.energy, exact) < 1e-6, "l={l} n={n}: {}", s.energy);
            assert_eq!(s.node_count, k);
            assert!((s.norm_check - 1.0).abs() < 1e-6);
            let a = s.near_origin_exponent.unwrap();
            assert!((a - (l as f64 + 1.0)).abs() < 0.02, "exponent {a}");
        }
    }
}

#[test]
fn hydrogen_solve_state_examples() {
    let s = solve_state(&hydrogen(0, GridSpec::default()), 0).unwrap();
    assert!(rel(s.energy, -0.5) < 5e-7);
    let s = solve_state(&hydrogen(1, GridSpec::default()), 0).unwrap();
    assert!(rel(s.energy, -0.125) < 5e-7);
    // n = 3, l = 0 has two radial nodes
    let s = solve_state(&hydrogen(0, GridSpec::default()), 2).unwrap();
    assert_eq!(s.node_count, 2);
}

#[test]
fn hydrogen_spectrum_example() {
    let states = spectrum(&hydrogen(0, GridSpec::default()), 3).unwrap();
    let energies: Vec<f64> = states.iter().map(|s| s.energy).collect();
    for (e, exact) in energies.iter().zip([-0.5, -0.125, -1.0 / 18.0]) {
        assert!(rel(*e, exact) < 1e-5);
    }
}

#[test]
fn hydrogen_mismatch_examples() {
    let spec = GridSpec {
        r_max: 40.0,
        n_points: 40000,
        ..GridSpec::default()
    };
    let req = hydrogen(0, spec);
    assert!(mismatch(&req, -0.5).unwrap().w.abs() < 1e-6);
    assert!(mismatch(&req, -0.6).unwrap().w.abs() > 1e-3);
}

#[test]
fn harmonic_levels() {
    let p = Potential::harmonic(1.0).unwrap();
    let spec = GridSpec {
        r_max: 12.0,
        n_points: 12000,
        ..GridSpec::default()
    };
    for l in 0..=1u32 {
        let grid = spec.build(&p, &BoundaryPolicy::Dirichlet, None).unwrap();
        let req = SolveRequest::new(p.clone(), l, BoundaryPolicy::Dirichlet, grid, (0.0, 10.0));
        let states = spectrum(&req, 3).unwrap();
        assert_eq!(states.len(), 3);
        for (n_r, s) in states.iter().enumerate() {
            let exact = 2.0 * n_r as f64 + l as f64 + 1.5;
            assert!(rel(s.energy, exact) < 1e-6, "l={l} n_r={n_r}: {}", s.energy);
        }
    }
}

#[test]
fn harmonic_mass_scaling() {
    // V = ½ m ω² r² with m = 2 keeps E = (2n_r + l + 3/2) ω
    let p = Potential::harmonic(1.0).unwrap();
    let spec = GridSpec {
        r_max: 10.0,
        n_points: 12000,
        ..GridSpec::default()
    };
    let grid = spec.build(&p, &BoundaryPolicy::Dirichlet, None).unwrap();
    let req = SolveRequest::new(p, 0, BoundaryPolicy::Dirichlet, grid, (0.0, 6.0)).with_mass(2.0);
    let s = solve_state(&req, 1).unwrap();
    assert!(rel(s.energy, 3.5) < 1e-6, "{}", s.energy);
}

#[test]
fn finite_well_matches_transcendental_roots() {
    let roots = finite_well_roots(10.0, 1.0);
    assert_eq!(roots.len(), 1);
    let p = Potential::finite_well(10.0, 1.0).unwrap();
    let spec = GridSpec {
        r_max: 20.0,
        n_points: 40000,
        ..GridSpec::default()
    };
    let grid = spec.build(&p, &BoundaryPolicy::Dirichlet, None).unwrap();
    assert!(grid.nodes().contains(&1.0));
    let req = SolveRequest::new(p, 0, BoundaryPolicy::Dirichlet, grid, (-10.0, -1e-6));
    let states = spectrum(&req, 10).unwrap();
    assert_eq!(states.len(), roots.len());
    for (s, root) in states.iter().zip(&roots) {
        assert!((s.energy - root).abs() < 1e-8, "{} vs {root}", s.energy);
    }
    assert!(mismatch(&req, roots[0]).unwrap().w.abs() < 1e-6);
    assert!(audit_eigenstate(&states[0]).unwrap().compatible);
}

#[test]
fn finite_well_wider_has_three_states() {
    let roots = finite_well_roots(10.0, 2.0);
    let p = Potential::finite_well(10.0, 2.0).unwrap();
    let spec = GridSpec {
        r_max: 20.0,
        n_points: 40000,
        ..GridSpec::default()
    };
    let grid = spec.build(&p, &BoundaryPolicy::Dirichlet, None).unwrap();
    let req = SolveRequest::new(p, 0, BoundaryPolicy::Dirichlet, grid, (-10.0, -1e-6));
    let states = spectrum(&req, 10).unwrap();
    assert_eq!(states.len(), 3);
    for (s, root) in states.iter().zip(&roots) {
        assert!((s.energy - root).abs() < 1e-8, "{} vs {root}", s.energy);
    }
}

#[test]
fn dirichlet_states_pass_the_audit() {
    for l in 0..=1u32 {
        for s in spectrum(&hydrogen(l, GridSpec::default()), 3).unwrap() {
            let report = audit_eigenstate(&s).unwrap();
            assert!(
                report.compatible,
                "l={l}: {:?}",
                report.extrapolated_strength
            );
        }
    }
}
