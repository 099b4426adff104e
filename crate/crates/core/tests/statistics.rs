mod common;

use rand::Rng;

use common::*;
use modelmeasure::graphmodel::{fit_ml, ModelForm};
use modelmeasure::stats::{chi2_sf, edge_test, g2, ContingencyTable, TesterConfig};
use modelmeasure::Dataset;

/// Γ(k/2) for integer k ≥ 1.
fn gamma_half(k: u64) -> f64 {
    let mut g = if k.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut a = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while a < k as f64 / 2.0 - 1e-9 {
        g *= a;
        a += 1.0;
    }
    g
}

fn chi2_density(x: f64, df: u64) -> f64 {
    let h = df as f64 / 2.0;
    x.powf(h - 1.0) * (-x / 2.0).exp() / (2f64.powf(h) * gamma_half(df))
}

/// Simpson's rule over [x, x + 400].
fn simpson_tail(x: f64, df: u64) -> f64 {
    let steps = 400_000;
    let h = 400.0 / steps as f64;
    let mut s = chi2_density(x, df) + chi2_density(x + 400.0, df);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * chi2_density(x + i as f64 * h, df);
    }
    s * h / 3.0
}

#[test]
fn chi2_tail_matches_numerical_integration() {
    let p = chi2_sf(3.841, 1).unwrap();
    assert!((p - 0.05).abs() <= 5e-4, "{p}");
    assert!((p - simpson_tail(3.841, 1)).abs() < 1e-7);
    for df in 1..=8 {
        for x in [0.5, 1.0, 2.5, 5.0, 9.0, 17.0] {
            let want = simpson_tail(x, df);
            let got = chi2_sf(x, df).unwrap();
            assert!((got - want).abs() < 1e-7, "df {df} x {x}: {got} vs {want}");
        }
    }
}

#[test]
fn g2_on_full_joint_equals_model_deviance() {
    let mut r = rng(10);
    for _ in 0..30 {
        let k = r.random_range(2..=5);
        let cards: Vec<usize> = (0..k).map(|_| r.random_range(2..=3)).collect();
        let d = domain(&cards);
        let data = random_data(&cards, 250, &mut r);
        let form = random_chordal(k, &mut r);
        let model = fit_ml(&form, &data, &d).unwrap();
        let all: Vec<usize> = (0..k).collect();
        let observed = ContingencyTable::from_data(&d, &data, &all);
        let expected: Vec<f64> = model
            .joint_table()
            .unwrap()
            .iter()
            .map(|p| p * data.len() as f64)
            .collect();
        let direct = g2(&observed, &expected).unwrap();
        let dev = model.deviance(&data);
        assert!(
            (direct - dev).abs() < 1e-8 * dev.max(1.0),
            "{direct} vs {dev}"
        );
    }
}

#[test]
fn deviance_grows_as_edges_are_removed() {
    let mut r = rng(11);
    for _ in 0..20 {
        let cards = vec![2, 3, 2, 2];
        let d = domain(&cards);
        let data = random_data(&cards, 300, &mut r);
        let mut form = ModelForm::saturated(names(4)).unwrap();
        let mut last = fit_ml(&form, &data, &d).unwrap().deviance(&data);
        assert!(last.abs() < 1e-9);
        for (a, b) in [(1, 2), (2, 3), (1, 3), (0, 3)] {
            form.remove_edge(a, b).unwrap();
            assert!(form.is_decomposable());
            let dev = fit_ml(&form, &data, &d).unwrap().deviance(&data);
            assert!(dev >= last - 1e-9, "{dev} < {last}");
            last = dev;
        }
    }
}

#[test]
fn simpler_models_have_wider_support() {
    let mut r = rng(12);
    for _ in 0..20 {
        let cards = vec![3, 2, 3];
        let d = domain(&cards);
        let data = random_data(&cards, 40, &mut r);
        let sat = fit_ml(&ModelForm::saturated(names(3)).unwrap(), &data, &d)
            .unwrap()
            .joint_table()
            .unwrap();
        let nb = fit_ml(&ModelForm::naive_bayes(names(3)).unwrap(), &data, &d)
            .unwrap()
            .joint_table()
            .unwrap();
        let ind = fit_ml(&ModelForm::independence(names(3)).unwrap(), &data, &d)
            .unwrap()
            .joint_table()
            .unwrap();
        for i in 0..sat.len() {
            assert!(sat[i] == 0.0 || nb[i] > 0.0);
            assert!(nb[i] == 0.0 || ind[i] > 0.0);
        }
    }
}

#[test]
fn identical_copies_are_strongly_dependent() {
    let d = domain(&[2, 2, 2]);
    let mut r = rng(13);
    let rows: Vec<Vec<u32>> = (0..200)
        .map(|_| {
            let a = r.random_range(0..2);
            vec![r.random_range(0..2), a, a]
        })
        .collect();
    let data = Dataset::from_rows(3, &rows);
    let sat = fit_ml(&ModelForm::saturated(names(3)).unwrap(), &data, &d).unwrap();
    let nb = fit_ml(&ModelForm::naive_bayes(names(3)).unwrap(), &data, &d).unwrap();
    let t = edge_test(&sat, &nb, &data, &TesterConfig::asymptotic()).unwrap();
    assert!(t.p_asymptotic < 1e-6, "{}", t.p_asymptotic);
    assert_eq!(t.df, 2);
    assert!(t.statistic > 200.0);
}

#[test]
fn independent_coins_are_not_rejected() {
    let d = domain(&[2, 2, 2]);
    let mut kept = 0;
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let rows: Vec<Vec<u32>> = (0..5000)
            .map(|_| {
                vec![
                    r.random_range(0..2),
                    r.random_range(0..2),
                    r.random_range(0..2),
                ]
            })
            .collect();
        let data = Dataset::from_rows(3, &rows);
        let sat = fit_ml(&ModelForm::saturated(names(3)).unwrap(), &data, &d).unwrap();
        let nb = fit_ml(&ModelForm::naive_bayes(names(3)).unwrap(), &data, &d).unwrap();
        let t = edge_test(&sat, &nb, &data, &TesterConfig::asymptotic()).unwrap();
        if t.p_asymptotic >= 0.01 {
            kept += 1;
        }
    }
    assert!(kept >= 18, "{kept}/20");
}

#[test]
fn monte_carlo_agrees_with_asymptotic_for_large_samples() {
    let spec = naive_bayes_spec(2, 4.0, &[(1, 2, 1.5)], 2000, 3);
    let data = spec.generate_coded().unwrap();
    let sat = fit_ml(
        &ModelForm::saturated(names(3)).unwrap(),
        &data,
        &spec.domain,
    )
    .unwrap();
    let nb = fit_ml(&spec.form.without_edge(1, 2).unwrap(), &data, &spec.domain).unwrap();
    let t = edge_test(&sat, &nb, &data, &TesterConfig::monte_carlo(999, 4)).unwrap();
    let exact = t.p_exact.unwrap();
    assert!(
        (exact - t.p_asymptotic).abs() < 0.05,
        "{exact} vs {}",
        t.p_asymptotic
    );
}

#[test]
fn edge_test_rejects_forms_that_are_not_one_edge_apart() {
    let d = domain(&[2, 2, 2, 2]);
    let data = random_data(&[2, 2, 2, 2], 50, &mut rng(14));
    let sat = fit_ml(&ModelForm::saturated(names(4)).unwrap(), &data, &d).unwrap();
    let nb = fit_ml(&ModelForm::naive_bayes(names(4)).unwrap(), &data, &d).unwrap();
    assert!(edge_test(&sat, &nb, &data, &TesterConfig::asymptotic()).is_err());
    assert!(edge_test(&nb, &sat, &data, &TesterConfig::asymptotic()).is_err());
}
