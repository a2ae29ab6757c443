use fso_relay::channel::{db_to_linear, turbulence_params, LinkGeometry, LinkParams};
use fso_relay::montecarlo::{simulate_outage, GammaGammaSampler, SimPlan};
use fso_relay::numerics::SeriesControl;
use fso_relay::protocols::{outage, AnalysisOptions, Mode, Protocol, SystemConfig};
use proptest::prelude::*;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn link(d: f64, rho: f64) -> LinkParams {
    let g = LinkGeometry {
        distance_km: d,
        rx_aperture_m: 0.2,
        tx_aperture_m: 0.2,
        divergence_mrad: 2.0,
        attenuation_per_km: 0.1,
    };
    LinkParams::from_geometry(g, 2e-14, 1550e-9, rho).unwrap()
}

fn config(rho: f64) -> SystemConfig {
    SystemConfig::new(vec![link(2.0, rho), link(1.5, rho)], vec![link(1.0, rho), link(2.5, rho)]).unwrap()
}

#[test]
fn sampler_moments_and_distribution() {
    let g = turbulence_params(2e-14, 1550e-9, 2.0).unwrap().distribution();
    let s = GammaGammaSampler::new(&g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 400_000;
    let mut xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let second = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
    // standard errors of the sample moments are below 2e-3 and 1e-2
    assert!((mean - 1.0).abs() < 1e-2, "mean {mean}");
    assert!((second / g.second_moment() - 1.0).abs() < 3e-2, "second moment {second}");
    xs.sort_by(f64::total_cmp);
    let ctl = SeriesControl::default();
    let mut d: f64 = 0.0;
    for k in 1..200 {
        let x = xs[k * n / 200];
        let empirical = xs.partition_point(|&v| v <= x) as f64 / n as f64;
        d = d.max((empirical - g.cdf(x, &ctl).unwrap().value).abs());
    }
    // 1% critical value of the Kolmogorov-Smirnov statistic
    assert!(d < 1.63 / (n as f64).sqrt(), "KS distance {d}");
}

#[test]
fn estimates_agree_with_exact_outage() {
    let pm = db_to_linear(35.0);
    for (p, rho) in [(Protocol::AllActive, 0.25), (Protocol::SelectMax, 0.5), (Protocol::Dssc, 0.5)] {
        let cfg = config(rho);
        let want = outage(&cfg, p, pm, Mode::Exact, None, &AnalysisOptions::default()).unwrap().p_out;
        let est = simulate_outage(&cfg, &SimPlan::new(p, pm, 400_000, 17)).unwrap();
        assert!(est.contains(want), "{p}: {} ± {} vs {want}", est.p_hat, est.ci_halfwidth_3sigma);
    }
}

#[test]
fn dssc_with_a_fixed_threshold() {
    let cfg = config(0.5);
    let pm = db_to_linear(32.0);
    for t in [pm * 0.5, pm * 2.0] {
        let want = outage(&cfg, Protocol::Dssc, pm, Mode::Exact, Some(t), &AnalysisOptions::default()).unwrap().p_out;
        let plan = SimPlan { threshold: Some(t), ..SimPlan::new(Protocol::Dssc, pm, 400_000, 3) };
        let est = simulate_outage(&cfg, &plan).unwrap();
        assert!(est.contains(want), "T = {t}: {} ± {} vs {want}", est.p_hat, est.ci_halfwidth_3sigma);
        let occ = est.occupancy.unwrap();
        assert!((occ[0] + occ[1] - 1.0).abs() < 1e-12);
        assert!(occ.iter().all(|&o| o > 0.0));
    }
}

#[test]
fn tiny_margin_is_always_in_outage() {
    let cfg = config(0.5);
    let est = simulate_outage(&cfg, &SimPlan::new(Protocol::SelectMax, 1e-12, 10_000, 1)).unwrap();
    assert_eq!(est.p_hat, 1.0);
    assert_eq!(est.ci_halfwidth_3sigma, 0.0);
}

#[test]
fn invalid_plans_are_rejected() {
    let cfg = config(0.5);
    assert!(simulate_outage(&cfg, &SimPlan::new(Protocol::SelectMax, 100.0, 0, 1)).is_err());
    assert!(simulate_outage(&cfg, &SimPlan::new(Protocol::SelectMax, -1.0, 10, 1)).is_err());
    assert!(simulate_outage(&cfg, &SimPlan::new(Protocol::AllActive, 100.0, 10, 1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimates_are_reproducible_probabilities(seed in any::<u64>(), db in 10.0f64..40.0, which in 0usize..3) {
        let p = Protocol::ALL[which];
        let cfg = config(if p == Protocol::AllActive { 0.25 } else { 0.5 });
        let plan = SimPlan::new(p, db_to_linear(db), 70_000, seed);
        let a = simulate_outage(&cfg, &plan).unwrap();
        let b = simulate_outage(&cfg, &plan).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!((0.0..=1.0).contains(&a.p_hat));
        prop_assert_eq!(a.n_slots, 70_000);
    }
}
