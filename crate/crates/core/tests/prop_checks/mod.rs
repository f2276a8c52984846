//! Structural checks shared by the property suite and the acceptance gate.
//! Each function panics with a diagnostic on violation and returns on
//! success, so callers can wrap them as individual tests or time the lot.

use rand::Rng;

use ssci_core::bootstrap::{
    residual_bootstrap_sample, run_ensemble, BootstrapDraw, BootstrapEnsemble,
};
use ssci_core::par::with_workers;
use ssci_core::path::predict;
use ssci_core::rng::sub_rng;
use ssci_core::select::{partition_at_lambda, two_stage, Method, SelectedModel, SelectorSpec};
use ssci_core::sim::{generate_dataset, run_study, ExampleSpec};
use ssci_core::ssci::{build_ssci, mcb_from_ssci, Class};

pub fn ensemble_from_betas(betas: Vec<Vec<f64>>) -> BootstrapEnsemble {
    let p = betas[0].len();
    let b = betas.len();
    let draws = betas
        .into_iter()
        .enumerate()
        .map(|(i, beta)| BootstrapDraw {
            model: beta
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, _)| j)
                .collect(),
            beta,
            replicate_id: i + 1,
        })
        .collect();
    BootstrapEnsemble {
        draws,
        base_model: SelectedModel {
            indices: vec![],
            beta_refit: vec![0.0; p],
            selector_tag: "synthetic".into(),
            truncated: false,
        },
        seed: 0,
        b,
    }
}

pub fn random_ensemble(b: usize, p: usize, seed: u64) -> BootstrapEnsemble {
    let mut rng = sub_rng(seed, 0);
    let betas = (0..b)
        .map(|_| {
            (0..p)
                .map(|j| {
                    if j == 0 || rng.random_range(0.0..1.0) < 0.4 {
                        rng.random_range(-3.0..3.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    ensemble_from_betas(betas)
}

pub fn check_interval_nesting() {
    for seed in 0..20u64 {
        let ens = random_ensemble(60, 5, seed);
        let ladder = [0.2, 0.1, 0.05, 0.01];
        let results: Vec<_> = ladder
            .iter()
            .map(|&a| build_ssci(&ens, a).unwrap())
            .collect();
        for w in results.windows(2) {
            let (narrow, wide) = (&w[0], &w[1]);
            for id in &narrow.retained {
                assert!(wide.retained.contains(id), "retained sets nest");
            }
            for j in 0..5 {
                assert!(wide.lower[j] <= narrow.lower[j]);
                assert!(narrow.upper[j] <= wide.upper[j]);
            }
            assert!(
                mcb_from_ssci(narrow).width <= mcb_from_ssci(wide).width,
                "bound width grows with confidence"
            );
        }
    }
}

pub fn check_retained_count_rule() {
    for (seed, b) in [(1u64, 40usize), (2, 100), (3, 128), (4, 500)] {
        let mut rng = sub_rng(seed, 0);
        let betas: Vec<Vec<f64>> = (0..b).map(|_| vec![rng.random_range(-5.0..5.0)]).collect();
        let ens = ensemble_from_betas(betas);
        // Continuous draws make ties impossible in practice; verify the
        // premise so the exact-count assertion below is meaningful.
        let mut values: Vec<f64> = ens.draws.iter().map(|d| d.beta[0]).collect();
        values.sort_by(f64::total_cmp);
        assert!(values.windows(2).all(|w| w[0] < w[1]), "distinct draws");

        for alpha in [0.05, 0.1, 0.25, 1.0 / 3.0] {
            let s = build_ssci(&ens, alpha).unwrap();
            let expected = ((1.0 - alpha) * b as f64).ceil() as usize;
            assert_eq!(
                s.retained.len(),
                expected,
                "alpha={alpha} b={b}: retained {} want {expected}",
                s.retained.len()
            );
        }
    }
}

pub fn check_rectangle_containment() {
    for seed in 20..35u64 {
        let ens = random_ensemble(50, 4, seed);
        let s = build_ssci(&ens, 0.1).unwrap();
        for draw in &ens.draws {
            if !s.retained.contains(&draw.replicate_id) {
                continue;
            }
            for j in 0..4 {
                assert!(
                    s.lower[j] <= draw.beta[j] && draw.beta[j] <= s.upper[j],
                    "retained draw escapes the rectangle"
                );
            }
        }
        for j in 0..4 {
            let retained_values: Vec<f64> = ens
                .draws
                .iter()
                .filter(|d| s.retained.contains(&d.replicate_id))
                .map(|d| d.beta[j])
                .collect();
            let min = retained_values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = retained_values
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(s.lower[j], min, "lower bound attained");
            assert_eq!(s.upper[j], max, "upper bound attained");
        }
    }
}

pub fn check_class_partition() {
    for seed in 40..55u64 {
        let ens = random_ensemble(40, 6, seed);
        let s = build_ssci(&ens, 0.05).unwrap();
        let m = mcb_from_ssci(&s);
        assert_eq!(s.classes.len(), 6);
        let mut sig = 0;
        let mut plaus = 0;
        let mut unimp = 0;
        for j in 0..6 {
            match s.classes[j] {
                Class::Significant => {
                    sig += 1;
                    assert!(s.lower[j] * s.upper[j] > 0.0);
                    assert!(m.lower_model.contains(&j));
                }
                Class::Unimportant => {
                    unimp += 1;
                    assert_eq!((s.lower[j], s.upper[j]), (0.0, 0.0));
                    assert!(!m.upper_model.contains(&j));
                }
                Class::Plausible => {
                    plaus += 1;
                    assert!(s.lower[j] <= 0.0 && s.upper[j] >= 0.0);
                    assert!(s.lower[j] != 0.0 || s.upper[j] != 0.0);
                    assert!(m.upper_model.contains(&j) && !m.lower_model.contains(&j));
                }
            }
        }
        assert_eq!(sig + plaus + unimp, 6);
        assert_eq!(m.width, plaus);
        assert_eq!(m.upper_model.len() - m.lower_model.len(), plaus);
    }
}

/// Reimplementation of the selection criterion's ratio semantics for
/// independent verification.
pub fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Independently re-derives the gap criterion for a claimed relevant set.
pub fn criterion_holds(beta: &[f64], relevant: &[usize], control_ratio: f64) -> bool {
    let p = beta.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|a, b| beta[*a].abs().total_cmp(&beta[*b].abs()).then(a.cmp(b)));
    let sorted: Vec<f64> = order.iter().map(|j| beta[*j].abs()).collect();
    let t = p - relevant.len();

    let mut expected: Vec<usize> = order[t..].to_vec();
    expected.sort_unstable();
    if expected != relevant {
        return false;
    }

    let gap = sorted[t] - sorted[t - 1];
    let mut d_max_rel = 0.0f64;
    for i in (t + 1)..p {
        d_max_rel = d_max_rel.max(sorted[i] - sorted[i - 1]);
    }
    let mut d_max_irrel = 0.0f64;
    for i in 1..t {
        d_max_irrel = d_max_irrel.max(sorted[i] - sorted[i - 1]);
    }
    ratio(d_max_rel, gap) <= control_ratio && control_ratio < ratio(gap, d_max_irrel)
}

fn random_beta(rng: &mut impl Rng) -> Vec<f64> {
    let p = rng.random_range(3..32);
    (0..p)
        .map(|_| {
            if rng.random_range(0.0..1.0) < 0.25 {
                0.0
            } else {
                rng.random_range(-4.0..4.0)
            }
        })
        .collect()
}

pub fn check_partition_criterion() {
    let mut rng = sub_rng(90, 0);
    for _ in 0..64 {
        let beta = random_beta(&mut rng);
        let control_ratio = rng.random_range(1.5..8.0);
        let relevant = partition_at_lambda(&beta, control_ratio);
        if relevant.is_empty() {
            continue;
        }
        assert!(relevant.len() < beta.len(), "a split leaves both sides nonempty");
        assert!(
            criterion_holds(&beta, &relevant, control_ratio),
            "criterion violated for beta={beta:?} R={control_ratio} relevant={relevant:?}"
        );
    }
}

pub fn check_partition_scale_invariance() {
    let mut rng = sub_rng(91, 0);
    for _ in 0..64 {
        let beta = random_beta(&mut rng);
        let scale = if rng.random_range(0.0..1.0) < 0.5 {
            rng.random_range(0.01..0.9)
        } else {
            rng.random_range(1.1..250.0)
        };
        let base = partition_at_lambda(&beta, 5.0);
        let scaled: Vec<f64> = beta.iter().map(|b| b * scale).collect();
        assert_eq!(partition_at_lambda(&scaled, 5.0), base, "scale {scale}");
    }
}

pub fn check_residual_centering() {
    let spec = ExampleSpec::new(50, 6, vec![2.0, -1.0, 0.0, 0.0, 0.0, 0.0], 0.0, 1.0, None)
        .unwrap();
    let (d, _, _) = generate_dataset(&spec, &mut sub_rng(60, 0));
    let selector = SelectorSpec::new(Method::SpspLasso);
    let base = two_stage(&d, &selector).unwrap();
    let fitted = predict(&d, &base.beta_refit);

    let mut rng = sub_rng(61, 0);
    let draws = 400;
    let mut total = 0.0;
    let mut count = 0usize;
    for _ in 0..draws {
        let y_b = residual_bootstrap_sample(&d, &base, &mut rng);
        for i in 0..50 {
            total += y_b[i] - fitted[i];
            count += 1;
        }
    }
    // The resampled residuals come from a mean-zero pool, so the grand mean
    // shrinks like sigma/sqrt(draws * n); 0.05 is a five-sigma margin here.
    let grand_mean = total / count as f64;
    assert!(
        grand_mean.abs() < 0.05,
        "bootstrap responses drift from the fit: {grand_mean}"
    );
}

pub fn check_worker_determinism() {
    let spec = ExampleSpec::new(
        40,
        10,
        {
            let mut b = vec![0.0; 10];
            b[0] = 2.0;
            b[1] = 1.5;
            b
        },
        0.0,
        0.5,
        None,
    )
    .unwrap();
    let (d, _, _) = generate_dataset(&spec, &mut sub_rng(70, 0));
    let selector = SelectorSpec::new(Method::SpspLasso);
    let base = two_stage(&d, &selector).unwrap();

    let one = with_workers(1, || run_ensemble(&d, &base, &selector, 32, 9)).unwrap();
    let eight = with_workers(8, || run_ensemble(&d, &base, &selector, 32, 9)).unwrap();
    assert_eq!(one.draws.len(), eight.draws.len());
    for (a, b) in one.draws.iter().zip(eight.draws.iter()) {
        assert_eq!(a, b, "draws must not depend on the worker count");
    }

    let study_spec = ExampleSpec::new(
        40,
        8,
        {
            let mut b = vec![0.0; 8];
            b[0] = 2.0;
            b[1] = 1.5;
            b
        },
        0.0,
        0.5,
        None,
    )
    .unwrap();
    let one = run_study(&study_spec, &selector, 4, 16, 0.1, 11, 1).unwrap();
    let eight = run_study(&study_spec, &selector, 4, 16, 0.1, 11, 8).unwrap();
    assert_eq!(one, eight);
}

pub fn check_ar1_lags() {
    let n = 10_000;
    let rho: f64 = 0.6;
    let spec = ExampleSpec::new(n, 8, vec![0.0; 8], rho, 1.0, None).unwrap();
    let (d, _, _) = generate_dataset(&spec, &mut sub_rng(80, 0));

    let corr = |a: &[f64], b: &[f64]| {
        let nf = a.len() as f64;
        let ma = a.iter().sum::<f64>() / nf;
        let mb = b.iter().sum::<f64>() / nf;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for i in 0..a.len() {
            cov += (a[i] - ma) * (b[i] - mb);
            va += (a[i] - ma).powi(2);
            vb += (b[i] - mb).powi(2);
        }
        cov / (va * vb).sqrt()
    };
    for k in [1usize, 2, 4] {
        let got = corr(d.column(2), d.column(2 + k));
        let want = rho.powi(k as i32);
        assert!(
            (got - want).abs() < 0.03,
            "lag-{k} correlation {got}, expected {want}"
        );
    }

    let independent = ExampleSpec::new(n, 3, vec![0.0; 3], 0.0, 1.0, None).unwrap();
    let (d0, _, _) = generate_dataset(&independent, &mut sub_rng(81, 0));
    assert!(corr(d0.column(0), d0.column(1)).abs() < 0.03);
}
