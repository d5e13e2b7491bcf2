//! Regression and test-statistic estimators against hand-rolled oracles.

use cautious_core::stats::{
    kruskal_wallis, ks_two_sample, logistic_fit, ols_fit, sigmoid, DesignMatrix, Table, Term,
};
use proptest::prelude::*;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Weighted normal equations `X'WX b = X'Wy` with an explicit intercept.
fn normal_equations(cols: &[Vec<f64>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let row = |i: usize| -> Vec<f64> { std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect() };
    let p = cols.len() + 1;
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let r = row(i);
        for a in 0..p {
            xty[a] += w[i] * r[a] * y[i];
            for b in 0..p {
                xtx[a][b] += w[i] * r[a] * r[b];
            }
        }
    }
    solve(xtx, xty)
}

fn table(cols: &[Vec<f64>], y: &[f64]) -> (Table, Vec<Term>) {
    let mut t = Table::new(y.len());
    let mut terms = Vec::new();
    for (k, c) in cols.iter().enumerate() {
        let name = format!("x{k}");
        t.add_complete(&name, c);
        terms.push(Term::num(&name));
    }
    t.add_complete("y", y);
    (t, terms)
}

fn regression_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (12usize..60, 1usize..5).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, n), k),
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(0.1f64..3.0, n),
        )
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ols_matches_normal_equations((cols, y, w) in regression_case()) {
        let (t, terms) = table(&cols, &y);
        let d = DesignMatrix::build(&t, "y", &terms).unwrap();
        let fit = ols_fit(&d, None).unwrap();
        let want = normal_equations(&cols, &y, &vec![1.0; y.len()]);
        for (g, w) in fit.coef.iter().zip(&want) {
            prop_assert!(close(*g, *w, 1e-8), "{} vs {}", g, w);
        }
        let wls = ols_fit(&d, Some(&w)).unwrap();
        let want = normal_equations(&cols, &y, &w);
        for (g, w) in wls.coef.iter().zip(&want) {
            prop_assert!(close(*g, *w, 1e-8), "{} vs {}", g, w);
        }
    }

    #[test]
    fn ols_residual_variance(
        (cols, y, _) in regression_case().prop_filter("df", |(c, y, _)| y.len() > c.len() + 1)
    ) {
        let (t, terms) = table(&cols, &y);
        let d = DesignMatrix::build(&t, "y", &terms).unwrap();
        let fit = ols_fit(&d, None).unwrap();
        let rss: f64 = (0..y.len())
            .map(|i| {
                let fitted = fit.coef[0] + cols.iter().enumerate().map(|(k, c)| fit.coef[k + 1] * c[i]).sum::<f64>();
                (y[i] - fitted).powi(2)
            })
            .sum();
        let df = y.len() - cols.len() - 1;
        prop_assert_eq!(fit.df, df);
        prop_assert!(close(fit.sigma * fit.sigma, rss / df as f64, 1e-8));
    }
}

fn loglik(x: &[f64], y: &[f64], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let eta = b0 + b1 * xi;
            // log(1 + e^eta) computed stably
            let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            yi * eta - softplus
        })
        .sum()
}

/// Compass search over a shrinking grid; the log-likelihood is concave.
fn grid_mle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    let mut value = loglik(x, y, 0.0, 0.0);
    let mut step = 1.0;
    while step > 1e-10 {
        let mut moved = false;
        for (d0, d1) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let cand = (best.0 + d0 * step, best.1 + d1 * step);
            let v = loglik(x, y, cand.0, cand.1);
            if v > value {
                best = cand;
                value = v;
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    best
}

fn overlapping(x: &[f64], y: &[f64]) -> bool {
    let range = |label: f64| {
        let v: Vec<f64> = x.iter().zip(y).filter(|(_, &l)| l == label).map(|(&v, _)| v).collect();
        (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };
    let (min1, max1) = range(1.0);
    let (min0, max0) = range(0.0);
    min1.is_finite() && min0.is_finite() && min1 < max0 && min0 < max1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn logistic_matches_grid_mle(
        x in prop::collection::vec(-2.0f64..2.0, 30..80),
        u in prop::collection::vec(0.0f64..1.0, 80),
        b0 in -1.0f64..1.0,
        b1 in -1.5f64..1.5,
    ) {
        let y: Vec<f64> = x.iter().zip(&u).map(|(&xi, &ui)| f64::from(u8::from(ui < sigmoid(b0 + b1 * xi)))).collect();
        prop_assume!(overlapping(&x, &y));
        let mut t = Table::new(x.len());
        t.add_complete("x", &x);
        t.add_complete("y", &y);
        let d = DesignMatrix::build(&t, "y", &[Term::num("x")]).unwrap();
        let fit = logistic_fit(&d, None).unwrap();
        let (g0, g1) = grid_mle(&x, &y);
        prop_assert!((fit.coef[0] - g0).abs() <= 1e-4, "{} vs {}", fit.coef[0], g0);
        prop_assert!((fit.coef[1] - g1).abs() <= 1e-4, "{} vs {}", fit.coef[1], g1);
    }
}

#[test]
fn ks_hand_cases() {
    let r = ks_two_sample(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    assert!((r.d - 1.0 / 3.0).abs() <= 1e-12);
    let r = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(r.d, 0.0);
    let r = ks_two_sample(&[1.0, 2.0], &[5.0, 6.0, 7.0]).unwrap();
    assert_eq!(r.d, 1.0);
}

#[test]
fn kw_hand_case() {
    let r = kruskal_wallis(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
    assert!((r.h - 2.4).abs() <= 1e-12);
    assert_eq!(r.df, 1);
}

fn ecdf(sample: &[f64], t: f64) -> f64 {
    sample.iter().filter(|&&v| v <= t).count() as f64 / sample.len() as f64
}

proptest! {
    #[test]
    fn ks_statistic_is_ecdf_sup(
        x in prop::collection::vec(0i32..20, 1..25),
        y in prop::collection::vec(0i32..20, 1..25),
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let want = x
            .iter()
            .chain(&y)
            .map(|&t| (ecdf(&x, t) - ecdf(&y, t)).abs())
            .fold(0.0, f64::max);
        let got = ks_two_sample(&x, &y).unwrap();
        prop_assert!((got.d - want).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&got.p));
    }

    #[test]
    fn kw_without_ties_matches_rank_formula(
        values in prop::collection::btree_set(-1000i32..1000, 4..30),
        cut in 1usize..3,
    ) {
        let v: Vec<f64> = values.into_iter().map(f64::from).collect();
        // interleave to avoid trivially sorted groups
        let groups: Vec<Vec<f64>> = (0..=cut).map(|g| v.iter().copied().skip(g).step_by(cut + 1).collect()).collect();
        prop_assume!(groups.iter().all(|g| !g.is_empty()));
        let n = v.len() as f64;
        let rank = |x: f64| v.iter().filter(|&&w| w < x).count() as f64 + 1.0;
        let h = 12.0 / (n * (n + 1.0))
            * groups
                .iter()
                .map(|g| g.iter().map(|&x| rank(x)).sum::<f64>().powi(2) / g.len() as f64)
                .sum::<f64>()
            - 3.0 * (n + 1.0);
        let refs: Vec<&[f64]> = groups.iter().map(|g| g.as_slice()).collect();
        let got = kruskal_wallis(&refs).unwrap();
        prop_assert!((got.h - h).abs() <= 1e-9);
        prop_assert_eq!(got.df, cut);
    }
}
