use sidiff::diagnostics::{histogram, kl_to_gibbs, uniform_edges};
use sidiff::gibbs::GibbsMeasure;
use sidiff::schedule::Schedule;
use sidiff::sde::{
    ensemble_map, run_coupled_yz, run_kolmogorov, run_x, run_y, run_z_annealed, Annealing, ProcessKind, Sample,
    SimConfig, Trajectory,
};
use sidiff::{Point, Potential, RngStream};

#[test]
fn x_and_y_agree_under_the_change_of_variables() {
    // same increments drive both; Y = X − μ̄ up to discretisation error
    let p = Potential::double_well();
    let s = Schedule::logarithmic(0.5, std::f64::consts::E).unwrap();
    let cfg = SimConfig::new(1e-4, 20.0).unwrap().with_stride(1000);
    let (x0, mu0) = (Point::new1(0.3), Point::new1(-0.2));
    let rng = RngStream::new(11, 0);
    let mut tx = Trajectory::empty(ProcessKind::X, cfg.dt, 11, 0);
    run_x(&p, &s, 1.0, x0, mu0, &cfg, rng.clone(), &mut tx).unwrap();
    let mut ty = Trajectory::empty(ProcessKind::YMu, cfg.dt, 11, 0);
    run_y(&p, &s, 1.0, x0 - mu0, mu0, &cfg, rng, &mut ty).unwrap();
    assert_eq!(tx.times, ty.times);
    for i in 0..tx.len() {
        let y_from_x = (tx.states[i] - tx.mu[i]).x();
        assert!((y_from_x - ty.states[i].x()).abs() < 0.02, "t = {}: {y_from_x} vs {}", tx.times[i], ty.states[i].x());
        assert!((tx.mu[i].x() - ty.mu[i].x()).abs() < 0.02);
    }
}

#[test]
fn kolmogorov_variance_on_quadratic() {
    // OU from 0: Var Z_t = (1 − e^{−2t})/2
    let q = Potential::quadratic(1, 1.0).unwrap();
    let cfg = SimConfig::new(1e-3, 2.0).unwrap().with_stride(2000);
    let finals = ensemble_map(4000, 5, 0, |_, rng| {
        let mut last = 0.0;
        run_kolmogorov(&q, Point::new1(0.0), &cfg, rng, &mut |s: &Sample| last = s.x.x()).unwrap();
        last
    });
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let var = finals.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let want = 0.5 * (1.0 - (-4.0f64).exp());
    assert!(mean.abs() < 0.04, "{mean}");
    assert!((var - want).abs() < 0.04, "{var} vs {want}");
}

#[test]
fn frozen_z_samples_its_gibbs_measure() {
    let p = Potential::double_well();
    let (eps2, horizon, burn) = (0.5, 100.0, 20.0);
    let cfg = SimConfig::new(1e-3, horizon).unwrap().with_stride(100);
    let frozen = Annealing::Frozen { eps2, a: f64::INFINITY };
    let paths = ensemble_map(200, 17, 0, |_, rng| {
        let mut xs = Vec::new();
        run_z_annealed(&p, &frozen, Point::new1(0.0), &cfg, rng, &mut |s: &Sample| {
            if s.t >= burn {
                xs.push(s.x.x())
            }
        })
        .unwrap();
        xs
    });
    let samples: Vec<f64> = paths.concat();
    let m = GibbsMeasure::new(&p, eps2, f64::INFINITY).unwrap();
    let d = kl_to_gibbs(&samples, &m, &uniform_edges(-2.5, 2.5, 50)).unwrap();
    assert!(d.tv < 0.05, "TV = {}", d.tv);
    assert!(d.kl < 0.01, "KL = {}", d.kl);
}

#[test]
fn annealed_z_without_confinement_changes_only_through_the_schedule() {
    // at a = ∞ and a fixed ε² the annealed and Kolmogorov-type runs coincide
    let p = Potential::double_well();
    let cfg = SimConfig::new(1e-3, 5.0).unwrap().with_stride(500);
    let frozen = Annealing::Frozen { eps2: 1.0, a: f64::INFINITY };
    let mut a = Trajectory::empty(ProcessKind::ZAnnealed, cfg.dt, 3, 0);
    run_z_annealed(&p, &frozen, Point::new1(0.5), &cfg, RngStream::new(3, 0), &mut a).unwrap();
    let mut b = Trajectory::empty(ProcessKind::ZKolmogorov, cfg.dt, 3, 0);
    run_kolmogorov(&p, Point::new1(0.5), &cfg, RngStream::new(3, 0), &mut b).unwrap();
    assert_eq!(a.states, b.states);
}

#[test]
fn coupled_gap_shrinks() {
    let p = Potential::double_well();
    let cfg = SimConfig::new(1e-2, 1000.0).unwrap().with_stride(10);
    let gaps = ensemble_map(64, 23, 0, |_, rng| {
        let (mut early, mut late) = (Vec::new(), Vec::new());
        run_coupled_yz(&p, 1.0, Point::new1(1.0), Point::new1(-1.0), Point::new1(0.0), &cfg, rng, &mut |s: &Sample| {
            let g = (s.x - s.partner.unwrap()).norm2();
            if (1.0..=10.0).contains(&s.t) {
                early.push(g);
            } else if s.t >= 100.0 {
                late.push(g);
            }
        })
        .unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        (mean(&early), mean(&late))
    });
    let early = gaps.iter().map(|g| g.0).sum::<f64>();
    let late = gaps.iter().map(|g| g.1).sum::<f64>();
    assert!(early >= 10.0 * late, "early {early} late {late}");
}

#[test]
fn annealed_occupation_concentrates_on_the_wells() {
    let p = Potential::double_well();
    let s = Schedule::logarithmic(0.25, std::f64::consts::E).unwrap();
    let cfg = SimConfig::new(1e-2, 400.0).unwrap().with_stride(10);
    let annealing = Annealing::Schedule { schedule: s, r: 1.0 };
    let late: Vec<f64> = ensemble_map(64, 29, 0, |_, rng| {
        let mut xs = Vec::new();
        run_z_annealed(&p, &annealing, Point::new1(0.0), &cfg, rng, &mut |s: &Sample| {
            if s.t >= 200.0 {
                xs.push(s.x.x())
            }
        })
        .unwrap();
        xs
    })
    .concat();
    let h = histogram(&late, &[-1.5, -0.5, 0.5, 1.5]);
    assert!(h[1] < 0.1, "barrier mass {}", h[1]);
    assert!((h[0] - h[2]).abs() < 0.2, "{h:?}");
}
