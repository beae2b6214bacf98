use fefi::learners::Regressor;
use fefi::synthgen::*;
use fefi::{FefiError, Matrix};
use nalgebra::DMatrix;

struct Linear(Vec<f64>);

impl Regressor for Linear {
    fn n_features(&self) -> usize {
        self.0.len()
    }
    fn predict_row(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.0).map(|(x, b)| x * b).sum()
    }
}

struct Product(usize, usize, usize);

impl Regressor for Product {
    fn n_features(&self) -> usize {
        self.2
    }
    fn predict_row(&self, row: &[f64]) -> f64 {
        row[self.0] * row[self.1]
    }
}

struct Constant(usize, f64);

impl Regressor for Constant {
    fn n_features(&self) -> usize {
        self.0
    }
    fn predict_row(&self, _: &[f64]) -> f64 {
        self.1
    }
}

fn spec(n: usize, d: usize, frac: f64, noise: f64, level: InteractionLevel, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_instances: n,
        n_features: d,
        informative_fraction: frac,
        noise_std: noise,
        interaction_level: level,
        seed,
    }
}

fn max_offdiag(m: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                best = best.max(v.abs());
            }
        }
    }
    best
}

#[test]
fn dataset_one_has_nine_informative_features() {
    for seed in 0..5 {
        let d = generate_dataset(&SyntheticSpec::benchmark(1, seed).unwrap()).unwrap();
        assert_eq!(d.coefficients.iter().filter(|c| **c != 0.0).count(), 9);
        assert_eq!(d.ground_truth_importance.iter().copied().fold(0.0, f64::max), 1.0);
        for (c, g) in d.coefficients.iter().zip(&d.ground_truth_importance) {
            if *c == 0.0 {
                assert_eq!(*g, 0.0);
            }
            assert!((0.0..=1.0).contains(g));
        }
        assert_eq!(d.n_instances(), 2000);
        assert_eq!(d.n_features(), 10);
    }
}

#[test]
fn generation_is_deterministic() {
    let s = SyntheticSpec::benchmark(4, 17).unwrap();
    assert_eq!(generate_dataset(&s).unwrap(), generate_dataset(&s).unwrap());
    let other = SyntheticSpec::benchmark(4, 18).unwrap();
    assert_ne!(generate_dataset(&s).unwrap().features, generate_dataset(&other).unwrap().features);
}

#[test]
fn noiseless_targets_are_exactly_linear() {
    let d = generate_dataset(&spec(4, 2, 1.0, 0.0, InteractionLevel::Low, 3)).unwrap();
    for (row, y) in d.features.iter_rows().zip(&d.targets) {
        let expected: f64 = row.iter().zip(&d.coefficients).map(|(x, c)| x * c).sum();
        assert_eq!(*y, expected);
    }
}

#[test]
fn high_interaction_is_low_rank_and_correlated() {
    let s = SyntheticSpec::benchmark(5, 9).unwrap();
    assert_eq!(s.effective_rank(), 2);
    let low = low_rank_component(&s).unwrap();
    let m = DMatrix::from_row_slice(low.rows(), low.cols(), low.as_slice());
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    assert!(sv[2] / sv[0] < 1e-10, "sigma_3 / sigma_1 = {}", sv[2] / sv[0]);

    let d = generate_dataset(&s).unwrap();
    assert!(max_offdiag(&pearson_matrix(&d.features).unwrap()) > 0.5);
}

#[test]
fn rank_mapping() {
    use InteractionLevel::*;
    assert_eq!(Low.effective_rank(10), 10);
    assert_eq!(Medium.effective_rank(10), 5);
    assert_eq!(Medium.effective_rank(7), 4);
    assert_eq!(High.effective_rank(10), 2);
    assert_eq!(High.effective_rank(50), 10);
    assert_eq!(High.effective_rank(3), 2);
}

#[test]
fn low_interaction_columns_are_nearly_uncorrelated() {
    let passing = (0..5)
        .filter(|&seed| {
            let d = generate_dataset(&SyntheticSpec::benchmark(1, seed).unwrap()).unwrap();
            max_offdiag(&pearson_matrix(&d.features).unwrap()) < 0.1
        })
        .count();
    assert!(passing >= 4, "{passing} of 5 seeds");
}

#[test]
fn pearson_examples() {
    let x = Matrix::from_rows(&[vec![1.0, 1.0, -1.0], vec![2.0, 2.0, -2.0], vec![4.0, 4.0, -4.0]]).unwrap();
    let r = pearson_matrix(&x).unwrap();
    assert!((r[0][1] - 1.0).abs() < 1e-15);
    assert!((r[0][2] + 1.0).abs() < 1e-15);
    for i in 0..3 {
        assert_eq!(r[i][i], 1.0);
        for j in 0..3 {
            assert_eq!(r[i][j], r[j][i]);
        }
    }
    let flat = Matrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0]]).unwrap();
    assert!(matches!(pearson_matrix(&flat), Err(FefiError::DegenerateFeature { column: 1 })));
}

#[test]
fn invalid_specs_are_parameter_errors() {
    for s in [
        spec(1, 5, 0.5, 0.1, InteractionLevel::Low, 0),
        spec(10, 1, 1.0, 0.1, InteractionLevel::Low, 0),
        spec(10, 5, 0.0, 0.1, InteractionLevel::Low, 0),
        spec(10, 5, 0.05, 0.1, InteractionLevel::Low, 0),
        spec(10, 5, 0.5, -1.0, InteractionLevel::Low, 0),
    ] {
        assert!(matches!(generate_dataset(&s), Err(FefiError::Parameter(_))), "{s:?}");
    }
    assert!(SyntheticSpec::benchmark(0, 1).is_err());
    assert!(SyntheticSpec::benchmark(10, 1).is_err());
}

#[test]
fn partial_dependence_of_linear_model_has_its_slope() {
    let d = generate_dataset(&SyntheticSpec::benchmark(1, 2).unwrap()).unwrap();
    let model = Linear(d.coefficients.clone());
    let j = 3;
    let pd = partial_dependence(&model, &d.features, &[j], &[vec![-1.0], vec![2.0]]).unwrap();
    let slope = (pd[1] - pd[0]) / 3.0;
    assert!((slope - d.coefficients[j]).abs() < 1e-9);

    let c = partial_dependence(&Constant(10, 4.5), &d.features, &[0], &[vec![0.0], vec![1.0]]).unwrap();
    assert_eq!(c, vec![4.5, 4.5]);

    let p = partial_dependence(&Product(1, 4, 10), &d.features, &[1, 4], &[vec![2.0, -3.0], vec![0.5, 0.5]]).unwrap();
    assert_eq!(p, vec![-6.0, 0.25]);

    assert!(matches!(
        partial_dependence(&model, &d.features, &[10], &[vec![0.0]]),
        Err(FefiError::Parameter(_))
    ));
}

#[test]
fn h_statistic_of_additive_pair_is_zero() {
    let d = generate_dataset(&SyntheticSpec::benchmark(1, 4).unwrap()).unwrap();
    let h = friedman_h_pairwise(&Linear(d.coefficients.clone()), &d.features, (0, 1), H_GRID, 500).unwrap();
    assert!(h < 1e-6, "H = {h}");
}

#[test]
fn h_statistic_of_product_matches_closed_form() {
    let d = generate_dataset(&SyntheticSpec::benchmark(1, 4).unwrap()).unwrap();
    let (j, k, n_mc) = (2, 7, 400);
    let h = friedman_h_pairwise(&Product(j, k, 10), &d.features, (j, k), H_GRID, n_mc).unwrap();

    // PD_j(a) = a * mean(x_k), PD_k(b) = b * mean(x_j), PD_jk(a, b) = a * b.
    let mean_of = |c: usize| (0..n_mc).map(|i| d.features.get(i, c)).sum::<f64>() / n_mc as f64;
    let (mj, mk) = (mean_of(j), mean_of(k));
    let gj = quantile_grid(&d.features, j, H_GRID);
    let gk = quantile_grid(&d.features, k, H_GRID);
    let center = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.into_iter().map(|x| x - m).collect::<Vec<_>>()
    };
    let pj = center(gj.iter().map(|a| a * mk).collect());
    let pk = center(gk.iter().map(|b| b * mj).collect());
    let pjk = center(gj.iter().flat_map(|a| gk.iter().map(move |b| a * b)).collect());
    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..H_GRID {
        for b in 0..H_GRID {
            let v = pjk[a * H_GRID + b];
            num += (v - pj[a] - pk[b]).powi(2);
            den += v * v;
        }
    }
    let oracle = (num / den).clamp(0.0, 1.0).sqrt();
    assert!((h - oracle).abs() < 1e-9, "{h} vs {oracle}");
    assert!(h > 0.5);
}

#[test]
fn h_statistic_of_constant_model_is_indeterminate() {
    let d = generate_dataset(&SyntheticSpec::benchmark(1, 4).unwrap()).unwrap();
    assert!(matches!(
        friedman_h_pairwise(&Constant(10, 1.0), &d.features, (0, 1), H_GRID, 100),
        Err(FefiError::IndeterminateH)
    ));
}

#[test]
fn interaction_report_invariants() {
    let d = generate_dataset(&spec(300, 4, 1.0, 0.1, InteractionLevel::Low, 5)).unwrap();
    let r = interaction_report(&Product(0, 1, 4), &d.features, 8, 100).unwrap();
    assert_eq!(r.h_statistics.len(), 6);
    assert!(r.h_statistics.windows(2).all(|w| w[0].1 >= w[1].1));
    assert!(r.h_statistics.iter().all(|(_, h)| (0.0..=1.0).contains(h)));
    assert_eq!(r.h_statistics[0].0, (0, 1));
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = generate_dataset(&spec(50, 3, 0.7, 0.3, InteractionLevel::Medium, 8)).unwrap();
    write_dataset(&d, dir.path(), "ds").unwrap();
    let header = std::fs::read_to_string(dir.path().join("ds.csv")).unwrap();
    assert!(header.starts_with("f0,f1,f2,target\n"));
    assert_eq!(read_dataset(dir.path(), "ds").unwrap(), d);
}
