use std::cmp::Ordering;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use yfree::asymptotics::{
    asym_risk, asym_risk_opt, asym_risk_stieltjes, asym_risk_zero, asym_variance,
    asym_variance_stieltjes, lambda_opt, lambda_t,
};
use yfree::criteria::{CriterionSpec, InSampleMode};
use yfree::data::{decode_labels, one_hot_compact, r_squared, rng, standardize, Target};
use yfree::linalg::sym_eigen;
use yfree::ntk::{train_smoother, Architecture, LossKind, Network, TrainConfig};
use yfree::selection::{grid_select, log_grid, Axis, Family, HyperGrid};
use yfree::smoothers::{
    fit_forest, gradient_flow_smoother, knn_smoother, rf_smoother, BuildTarget, RidgeScaling,
    TreeParams,
};
use yfree::workbench::{prepare_rep, yfree_smoothers, Command, ExperimentConfig};
use yfree::{Mat, MatrixNorm, Vector};

fn gaussian(seed: u64, rows: usize, cols: usize) -> Mat {
    let mut r = rng(seed);
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut r))
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn one_hot_round_trip(classes in 2usize..=6, labels in prop::collection::vec(1usize..=6, 1..40)) {
        let labels: Vec<usize> = labels.into_iter().map(|l| (l - 1) % classes + 1).collect();
        let enc = one_hot_compact(&labels, classes).unwrap();
        prop_assert_eq!(decode_labels(&enc.y, classes).unwrap(), labels);
    }

    #[test]
    fn standardize_is_idempotent(seed in any::<u64>(), n in 2usize..30, d in 1usize..6) {
        let x = gaussian(seed, n, d) * 3.0 + Mat::from_element(n, d, 1.5);
        let (z, _) = standardize(&x, &x).unwrap();
        let (z2, _) = standardize(&z, &z).unwrap();
        prop_assert!((z2 - z).amax() <= 1e-12);
    }

    #[test]
    fn r_squared_endpoints(seed in any::<u64>(), n in 2usize..50) {
        let y = gaussian(seed, n, 1).column(0).into_owned();
        let mean = Vector::from_element(n, y.mean());
        prop_assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        prop_assert_eq!(r_squared(&y, &mean).unwrap(), 0.0);
    }

    #[test]
    fn averaging_smoothers_are_stochastic(seed in any::<u64>(), n in 3usize..30, d in 1usize..4, k in 1usize..30) {
        let x = gaussian(seed, n, d);
        let x_q = gaussian(seed ^ 1, 9, d);
        let y = gaussian(seed ^ 2, n, 1).column(0).into_owned();
        let knn = knn_smoother(&x, &x_q, k.min(n)).unwrap();
        let forest = fit_forest(&x, BuildTarget::Response(&y), 5, seed, &TreeParams::default()).unwrap();
        let rf = rf_smoother(&forest, &x, &x_q).unwrap();
        for set in [knn, rf] {
            for m in [&set.s, set.validation().unwrap()] {
                prop_assert!(m.iter().all(|&v| v >= 0.0));
                for row in m.row_iter() {
                    prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradient_flow_grows_in_t(seed in any::<u64>(), t1 in 1e-3f64..10.0, dt in 1e-3f64..10.0) {
        let x = gaussian(seed, 8, 12);
        let empty = Mat::zeros(0, 12);
        let a = gradient_flow_smoother(&x, &empty, t1).unwrap().s;
        let b = gradient_flow_smoother(&x, &empty, t1 + dt).unwrap().s;
        let diff = b - a;
        let sym = (&diff + diff.transpose()) * 0.5;
        prop_assert!(sym_eigen(&sym).unwrap().0.min() >= -1e-10);
    }

    #[test]
    fn norm_chain(seed in any::<u64>(), n in 1usize..12) {
        let b = gaussian(seed, n, n);
        let a = &b + b.transpose();
        let [tr, nuc, fro, spec] = MatrixNorm::ALL.map(|m| m.of(&a).unwrap());
        prop_assert!(fro - spec >= -1e-12);
        prop_assert!(nuc - fro >= -1e-12);
        prop_assert!(nuc - tr >= -1e-12);
    }

    #[test]
    fn yfree_gcv_and_in_sample_endpoints(seed in any::<u64>(), wide in any::<bool>()) {
        let x = if wide { gaussian(seed, 12, 30) } else { gaussian(seed, 25, 8) };
        let x_v = gaussian(seed ^ 7, 20, x.ncols());
        let mut values = vec![0.0];
        values.extend(log_grid(1e-6, 1e6, 61).unwrap());
        let lrr = Family::Lrr { scaling: RidgeScaling::Lambda };
        let g_l = HyperGrid::single(Axis::Lambda, values.clone()).unwrap();
        let g_t = HyperGrid::single(Axis::T, values.clone()).unwrap();
        for norm in MatrixNorm::ALL {
            let gcv = grid_select(&lrr, &g_l, &CriterionSpec::gcv_yfree(norm), &x, &x_v).unwrap();
            let trace: Vec<f64> = gcv.trace.iter().filter_map(|tp| tp.value).collect();
            prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{}", norm.name());
            prop_assert_eq!(gcv.chosen.get(Axis::Lambda), Some(1e6));
            let gf = grid_select(&Family::GradientFlow, &g_t, &CriterionSpec::gcv_yfree(norm), &x, &x_v).unwrap();
            prop_assert_eq!(gf.chosen.get(Axis::T), Some(0.0));
            if norm == MatrixNorm::Spectral && !wide {
                continue;
            }
            let spec = CriterionSpec::in_sample(InSampleMode::StS, norm);
            let ins = grid_select(&lrr, &g_l, &spec, &x, &x_v).unwrap();
            prop_assert!(ins.ties.iter().any(|p| p.get(Axis::Lambda) == Some(0.0)), "{}", norm.name());
            let ins = grid_select(&Family::GradientFlow, &g_t, &spec, &x, &x_v).unwrap();
            prop_assert!(ins.ties.iter().any(|p| p.get(Axis::T) == Some(1e6)), "{}", norm.name());
        }
    }

    #[test]
    fn argmin_ignores_grid_order(seed in any::<u64>(), ks in prop::collection::vec(1usize..=20, 1..12)) {
        let x = gaussian(seed, 20, 2);
        let x_v = gaussian(seed ^ 3, 30, 2);
        let mut shuffled: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        let sorted = shuffled.clone();
        shuffled.shuffle(&mut rng(seed));
        let spec = CriterionSpec::msv_norm(MatrixNorm::Frobenius);
        let a = grid_select(&Family::Knn, &HyperGrid::single(Axis::K, sorted).unwrap(), &spec, &x, &x_v).unwrap();
        let b = grid_select(&Family::Knn, &HyperGrid::single(Axis::K, shuffled).unwrap(), &spec, &x, &x_v).unwrap();
        prop_assert_eq!(&a.chosen, &b.chosen);
        // the chosen point is the most regularized of the ties
        prop_assert!(a.ties.iter().all(|p| a.chosen.regularization_cmp(p) != Ordering::Greater));
    }

    #[test]
    fn asymptotic_routes_agree(lambda in 1e-3f64..20.0, gamma in 0.05f64..5.0, snr in 0.5f64..80.0) {
        let v = asym_variance(lambda, gamma, 1.0).unwrap();
        let vs = asym_variance_stieltjes(lambda, gamma, 1.0).unwrap();
        prop_assert!((v - vs).abs() <= 1e-10 * v.abs().max(1.0));
        let r = asym_risk(lambda, gamma, snr, 1.0).unwrap();
        let rs = asym_risk_stieltjes(lambda, gamma, snr, 1.0).unwrap();
        prop_assert!((r - rs).abs() <= 1e-10 * r.abs().max(1.0));
        let opt = asym_risk_opt(gamma, snr, 1.0).unwrap();
        prop_assert!(r >= opt * (1.0 - 1e-12));
        let at_opt = asym_risk(lambda_opt(gamma, snr).unwrap(), gamma, snr, 1.0).unwrap();
        prop_assert!((at_opt - opt).abs() <= 1e-9 * opt);
    }

    #[test]
    fn lambda_t_window(gamma in 1e-3f64..10.0) {
        let l = lambda_t(gamma).unwrap();
        if gamma <= 0.5 || gamma >= 2.0 {
            prop_assert_eq!(l, 0.0);
        } else {
            prop_assert!(l >= 0.0);
            prop_assert!((lambda_t(gamma + 1e-9).unwrap() - l).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_net_matches_gradient_descent(seed in any::<u64>(), steps in 1usize..60) {
        let x = gaussian(seed, 10, 3);
        let y = gaussian(seed ^ 5, 10, 1);
        let net = Network::init(Architecture::Linear, 3, 1, &mut rng(seed)).unwrap();
        let eta = 0.01;
        let cfg = TrainConfig::new(LossKind::Squared, eta, 0.0, steps);
        let out = train_smoother(&net, &x, &Mat::zeros(0, 3), 0, &y, &cfg).unwrap();
        let k = &x * x.transpose();
        let step = Mat::identity(10, 10) - &k * eta;
        let mut power = Mat::identity(10, 10);
        for _ in 0..steps {
            power = &step * power;
        }
        let closed = Mat::identity(10, 10) - power;
        prop_assert!((&out.best.s - closed).amax() <= 1e-8);
    }
}

#[test]
fn risk_ratio_at_zero_is_monotone_outside_the_window() {
    let ratio = |g: f64, snr: f64| {
        asym_risk_zero(g, snr, 1.0).unwrap() / asym_risk_opt(g, snr, 1.0).unwrap()
    };
    let h = 1e-6;
    for snr in [1.0, 5.0, 20.0, 80.0] {
        for i in 1..=50 {
            let g = 0.5 * i as f64 / 50.0 - h;
            assert!(ratio(g + h, snr) > ratio(g - h, snr), "gamma={g} snr={snr}");
            let g = 2.0 + 0.1 * i as f64 + h;
            assert!(ratio(g + h, snr) < ratio(g - h, snr), "gamma={g} snr={snr}");
        }
    }
}

#[test]
fn scaling_y_changes_no_yfree_selection() {
    let mut cfg = ExperimentConfig::defaults(Command::Select);
    cfg.apply_text(
        "model = lrr,krr,knn,rf\ncriterion = msv_norm,msv_tr,gcv_yfree,kfold:5\n\
         n_train = 30\nn_test = 10\nn_val = 30\ndim = 2\nlambda = 1e-2:1e2:5\nsigma = 0.5:2:3\nrf_trees = 5",
    )
    .unwrap();
    let rd = prepare_rep(&cfg, None, 0).unwrap();
    let base = yfree_smoothers(&cfg, &rd, 0).unwrap();
    for c in [-3.0, 1e-6, 1e6] {
        let mut scaled = rd.clone();
        let Target::Response(y) = &rd.target else {
            unreachable!()
        };
        scaled.target = Target::Response(y * c);
        assert_eq!(yfree_smoothers(&cfg, &scaled, 0).unwrap(), base, "c={c}");
    }
}
