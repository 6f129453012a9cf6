mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use occkit::dataset::{generate_synthetic, BlobSpec, Cluster};
use occkit::kernel::gram_self;
use occkit::ocsvm::{box_bound, train_ocsvm, train_ocsvm_with};
use occkit::solver::SolverParams;
use occkit::svdd::{train_svdd, train_svdd_with};
use occkit::{Decision, KernelSpec};

fn spec_of(sigma: Option<f64>) -> KernelSpec {
    sigma.map_or(KernelSpec::Linear, |s| KernelSpec::Rbf { sigma: s })
}

#[test]
fn svdd_matches_qp_oracle() {
    for seed in 0..25 {
        let inst = random_instance(seed);
        let model = train_svdd(&inst.x, inst.c, spec_of(inst.sigma)).unwrap();
        let k = dense_gram(&inst.x, inst.sigma);
        let alpha = DVector::from_vec(model.alphas.clone());
        let oracle = svdd_oracle(&k, inst.c);
        let rel = relative_error(
            svdd_dual_value(&k, &alpha),
            svdd_dual_value(&k, &oracle),
            &k,
        );
        assert!(
            rel < 1e-5,
            "seed {seed}: {inst:?} relative objective error {rel:e}"
        );
    }
}

#[test]
fn ocsvm_matches_qp_oracle() {
    for seed in 100..125 {
        let inst = random_instance(seed);
        let model = train_ocsvm(&inst.x, inst.c, spec_of(inst.sigma)).unwrap();
        let k = dense_gram(&inst.x, inst.sigma);
        let alpha = DVector::from_vec(model.alphas.clone());
        let oracle = ocsvm_oracle(&k, inst.c);
        let rel = relative_error(
            ocsvm_dual_value(&k, &alpha),
            ocsvm_dual_value(&k, &oracle),
            &k,
        );
        assert!(
            rel < 1e-5,
            "seed {seed}: {inst:?} relative objective error {rel:e}"
        );
    }
}

#[test]
fn svdd_center_matches_oracle() {
    // α itself is poorly determined when K is ill-conditioned; the center
    // Σ α_i φ(x_i) is unique, so compare that
    let x = DMatrix::from_fn(20, 2, |r, c| ((r * 2 + c) as f64 * 2.17).sin() * 1.5);
    let model = train_svdd(&x, 0.2, KernelSpec::Rbf { sigma: 1.0 }).unwrap();
    let k = dense_gram(&x, Some(1.0));
    let diff = DVector::from_vec(model.alphas.clone()) - svdd_oracle(&k, 0.2);
    assert!((diff.transpose() * &k * &diff)[(0, 0)] < 1e-8);
}

#[test]
fn rbf_ocsvm_and_svdd_coincide_when_boxes_match() {
    for seed in 200..210 {
        let mut inst = random_instance(seed);
        let sigma = inst.sigma.unwrap_or(1.0);
        inst.sigma = Some(sigma);
        let kernel = KernelSpec::Rbf { sigma };
        let n = inst.x.nrows();
        let c_ocsvm = 0.3;
        let c_svdd = box_bound(c_ocsvm, n);
        let oc = train_ocsvm(&inst.x, c_ocsvm, kernel).unwrap();
        let sv = train_svdd(&inst.x, c_svdd, kernel).unwrap();
        // same optimum; compare through the strictly convex part of the objective
        let k = gram_self(&kernel, &inst.x);
        let a = DVector::from_vec(oc.alphas.clone());
        let b = DVector::from_vec(sv.alphas.clone());
        let diff = &a - &b;
        let gap = (diff.transpose() * &k * &diff)[(0, 0)];
        assert!(gap < 1e-8, "seed {seed}: centers {gap:e} apart");

        // α itself agrees once both solvers run well below the default tolerance
        let tight = SolverParams {
            tolerance: 1e-11,
            ..SolverParams::default()
        };
        let oc_tight = train_ocsvm_with(&inst.x, c_ocsvm, kernel, &tight).unwrap();
        let sv_tight = train_svdd_with(&inst.x, c_svdd, kernel, &tight).unwrap();
        for (a, b) in oc_tight.alphas.iter().zip(&sv_tight.alphas) {
            assert!((a - b).abs() < 1e-6, "seed {seed}: α {a} vs {b}");
        }

        let mut agree = 0;
        let probes = 1000;
        let d = inst.x.ncols();
        for p in 0..probes {
            let probe: Vec<f64> = (0..d)
                .map(|j| ((p * d + j) as f64 * 0.618).sin() * 2.0 * sigma)
                .collect();
            let da = oc.classify(&probe).unwrap().decision;
            let db = sv.classify(&probe).unwrap().decision;
            agree += usize::from(da == db);
        }
        assert!(
            agree as f64 / probes as f64 >= 0.999,
            "seed {seed}: {agree}/{probes}"
        );
    }
}

#[test]
fn nu_property_bounds() {
    for seed in 300..330 {
        let inst = random_instance(seed);
        let kernel = spec_of(inst.sigma);
        let n = inst.x.nrows() as f64;
        let rows: Vec<Vec<f64>> = (0..inst.x.nrows())
            .map(|i| inst.x.row(i).iter().copied().collect())
            .collect();

        let oc = train_ocsvm(&inst.x, inst.c, kernel).unwrap();
        let errors = rows
            .iter()
            .filter(|r| oc.classify(r).unwrap().decision == Decision::Outlier)
            .count() as f64;
        assert!(
            errors / n <= inst.c + 2.0 / n,
            "seed {seed}: margin errors {errors}"
        );
        // at least ⌈C n⌉ support vectors, since each α is at most 1/(C n)
        let svs = oc.support_indices.len() as f64;
        assert!(svs >= (inst.c * n - 1e-9).ceil(), "seed {seed}: {svs} SVs");

        let sv = train_svdd(&inst.x, inst.c, kernel).unwrap();
        let bound = (1.0 / inst.c - 1e-9).ceil();
        let outside = rows
            .iter()
            .filter(|r| sv.classify(r).unwrap().decision == Decision::Outlier)
            .count() as f64;
        assert!(
            outside <= bound,
            "seed {seed}: {outside} outside, bound {bound}"
        );
        assert!(sv.support_indices.len() as f64 >= bound);
    }
}

#[test]
fn hard_margin_ball_covers_training_data() {
    for seed in 400..410 {
        let inst = random_instance(seed);
        let model = train_svdd(&inst.x, 1.0, spec_of(inst.sigma)).unwrap();
        for i in 0..inst.x.nrows() {
            let row: Vec<f64> = inst.x.row(i).iter().copied().collect();
            let scored = model.classify(&row).unwrap();
            assert_eq!(
                scored.decision,
                Decision::Target,
                "seed {seed}: row {i} at {}",
                scored.score
            );
        }
    }
}

#[test]
fn free_support_vectors_are_on_the_sphere() {
    let inst = random_instance(17);
    let model = train_svdd(&inst.x, inst.c, spec_of(inst.sigma)).unwrap();
    let upper = inst.c.min(1.0);
    for &i in &model.support_indices {
        if occkit::solver::is_free(model.alphas[i], upper) {
            let row: Vec<f64> = inst.x.row(i).iter().copied().collect();
            let s = model.classify(&row).unwrap();
            assert!(
                s.score.abs() < 1e-5 * model.r_squared.max(1.0),
                "{}",
                s.score
            );
        }
    }
}

fn two_blobs(seed: u64) -> occkit::FeatureMatrix {
    // unit-variance blobs whose means are 6 standard deviations apart
    generate_synthetic(&BlobSpec {
        clusters: vec![
            Cluster::isotropic(vec![0.0, 0.0], 1.0, 200, "target"),
            Cluster::isotropic(vec![6.0, 0.0], 1.0, 200, "outlier"),
        ],
        seed,
    })
    .unwrap()
}

#[test]
fn two_blob_sweep() {
    let train = two_blobs(1);
    let test = two_blobs(2);
    let target_rows: Vec<usize> = (0..200).collect();
    let x = train.select(&target_rows);
    let svdd = train_svdd(x.data(), 0.3, KernelSpec::Linear).unwrap();
    let c_oc = 0.02;
    let ocsvm = train_ocsvm(x.data(), c_oc, KernelSpec::Rbf { sigma: 3.0 }).unwrap();
    let tpr = |f: &dyn Fn(&[f64]) -> Decision| {
        (0..200)
            .filter(|&i| f(&test.row(i)) == Decision::Target)
            .count() as f64
            / 200.0
    };
    let t_svdd = tpr(&|r| svdd.classify(r).unwrap().decision);
    let t_oc = tpr(&|r| ocsvm.classify(r).unwrap().decision);
    assert!(t_svdd >= 0.95, "svdd TPR {t_svdd}");
    assert!(t_oc >= 0.95, "ocsvm TPR {t_oc}");
    let negatives = (0..200)
        .filter(|&i| ocsvm.classify(&x.row(i)).unwrap().decision == Decision::Outlier)
        .count() as f64;
    assert!(negatives / 200.0 <= c_oc + 2.0 / 200.0);
    // the shifted blob is rejected
    let tnr = (200..400)
        .filter(|&i| svdd.classify(&test.row(i)).unwrap().decision == Decision::Outlier)
        .count();
    assert!(tnr >= 190, "svdd rejects {tnr}/200 outliers");
}
