//! Values recomputed by routes that share no code with the library.

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orlicz_sharp::convergence::{c0_analytic, coupled_schedule, norm_sweep, theorem_sweep, SweepOptions};
use orlicz_sharp::fields::{Grid, SampledField, TestFunction};
use orlicz_sharp::modular::{luxemburg_norm, modular, PsiFamily, PsiKind, RQuadrature, DEFAULT_TOL};
use orlicz_sharp::numeric::log_space;
use orlicz_sharp::phi::{check_delta2, complementary, ConjugateMode, LegendreGrid, MusielakOrlicz, KAPPA_CAP};

/// Composite Gauss–Legendre, 5 nodes per panel.
fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let m = a + (k as f64 + 0.5) * w;
            X.iter().zip(W).map(|(x, wt)| wt * f(m + 0.5 * w * x)).sum::<f64>() * 0.5 * w
        })
        .sum()
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn bump_prime(x: f64) -> f64 {
    if x.abs() < 1.0 {
        -2.0 * x / (1.0 - x * x).powi(2) * bump(x)
    } else {
        0.0
    }
}

#[test]
fn c0_disc_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut sum, mut hits) = (0.0, 0usize);
    while hits < 1_000_000 {
        let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if x * x + y * y < 1.0 {
            sum += x.abs();
            hits += 1;
        }
    }
    // standard error is about 3e-4
    assert!((sum / hits as f64 - c0_analytic(2).unwrap()).abs() < 2e-3);
}

#[test]
fn c0_ball_by_slabs() {
    // slab at height t has area π(1 − t²)
    let num = integrate(|t| t.abs() * std::f64::consts::PI * (1.0 - t * t), -1.0, 1.0, 64);
    let vol = 4.0 / 3.0 * std::f64::consts::PI;
    assert_relative_eq!(num / vol, c0_analytic(3).unwrap(), max_relative = 1e-12);
    assert_relative_eq!(integrate(f64::abs, -1.0, 1.0, 64) / 2.0, c0_analytic(1).unwrap(), max_relative = 1e-12);
}

#[test]
fn delta2_of_square_is_four() {
    let phi = MusielakOrlicz::power(2.0, 1).unwrap();
    let r = check_delta2(&phi, &[vec![0.3]], &log_space(1e-4, 1e4, 41), KAPPA_CAP).unwrap();
    assert_relative_eq!(r.kappa_hat, 4.0, max_relative = 1e-12);
}

#[test]
fn square_sweep_targets() {
    let energy = integrate(|x| bump_prime(x).powi(2), -1.0, 1.0, 400);
    let tf = TestFunction::radial_bump(1.0);
    let phi = MusielakOrlicz::power(2.0, 1).unwrap();
    let sched = coupled_schedule(0.5, 1.0 / 256.0, 2);
    let opts = SweepOptions::default();
    let modular_rows = theorem_sweep(&phi, &tf, &sched, &opts).unwrap().rows;
    let norm_rows = norm_sweep(&phi, &tf, &sched, &opts).unwrap().rows;
    for (m, n) in modular_rows.iter().zip(&norm_rows) {
        assert_relative_eq!(m.target, 0.25 * energy, max_relative = 1e-9);
        assert_relative_eq!(n.target, 0.5 * energy.sqrt(), max_relative = 1e-6);
    }
}

#[test]
fn psi_masses_in_closed_form() {
    for eps in [0.01, 0.25, 0.5, 1.0] {
        let pk = PsiFamily::new(PsiKind::PowerKernel, eps).unwrap();
        let bk = PsiFamily::new(PsiKind::BoxKernel, eps).unwrap();
        for (a, b) in [(0.0, 1.0), (0.01, 0.02), (0.1, 0.7), (0.5, 1.0)] {
            assert_relative_eq!(pk.mass(a, b).unwrap(), f64::powf(b, eps) - f64::powf(a, eps), max_relative = 1e-12);
            let boxed = (f64::min(b, eps) - f64::min(a, eps)) / eps;
            assert!((bk.mass(a, b).unwrap() - boxed).abs() < 1e-15);
            // density integrates to the mass
            let quad = integrate(|r| pk.density(r), a.max(1e-300), b, 2000);
            if a > 0.0 {
                assert_relative_eq!(quad, pk.mass(a, b).unwrap(), max_relative = 1e-9);
            }
        }
        let rq = RQuadrature::geometric(pk, 1.0 / 64.0).unwrap();
        assert_relative_eq!(rq.truncated_mass, f64::powf(1.0 / 64.0, eps), max_relative = 1e-12);
    }
}

#[test]
fn power_luxemburg_norm() {
    let grid = Grid::with_spacing(1, 2.0, 1.0 / 512.0).unwrap();
    let f = SampledField::from_fn(grid, |x| 3.0 * bump(x[0])).unwrap();
    for p in [1.0, 1.5, 2.0, 3.0, 5.0] {
        let phi = MusielakOrlicz::power(p, 1).unwrap();
        let exact = integrate(|x| (3.0 * bump(x)).powf(p), -1.0, 1.0, 400);
        assert_relative_eq!(modular(&phi, &f).unwrap(), exact, max_relative = 1e-9);
        assert_relative_eq!(luxemburg_norm(&phi, &f, DEFAULT_TOL).unwrap(), exact.powf(1.0 / p), max_relative = 1e-7);
    }
}

#[test]
fn power_conjugate() {
    for p in [1.5, 2.0, 3.0] {
        let phi = MusielakOrlicz::power(p, 1).unwrap();
        let q = p / (p - 1.0);
        for s in [1e-2, 0.3, 1.0, 7.0, 1e2] {
            // sup_t (st − t^p) is attained at t = (s/p)^{1/(p−1)}
            let exact = (p - 1.0) * (s / p).powf(q);
            let closed = complementary(&phi, &[0.0], s, ConjugateMode::ClosedForm).unwrap();
            let numeric =
                complementary(&phi, &[0.0], s, ConjugateMode::NumericLegendre(LegendreGrid::default())).unwrap();
            assert_relative_eq!(closed, exact, max_relative = 1e-12);
            assert_relative_eq!(numeric, exact, max_relative = 1e-6);
        }
    }
}
