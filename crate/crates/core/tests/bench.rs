mod common;

use proptest::prelude::*;

use robustgc::bench::{
    self, BenchConfig, Dataset, DatasetConfig, DatasetSource, ExperimentKind, GridSpec, SizeRule, SolveOptions,
};
use robustgc::classify::{self, Method, MethodParam};
use robustgc::data::{self, SbmSpec};
use robustgc::spectral::{self, SpectralContext};
use robustgc::{ClassifierSolution, Error};

fn scores(s: Vec<f64>) -> ClassifierSolution {
    ClassifierSolution {
        scores: s,
        method: Method::Zhou,
        param: MethodParam::Gamma(1.0),
        residual: 0.0,
        iterations: 0,
    }
}

fn low_connectivity() -> Dataset {
    let sample = data::sbm_generate(&SbmSpec::uniform(2, 100, 0.7, 0.3, 7)).unwrap();
    Dataset {
        name: "sbm_inter30".into(),
        truth: sample.truth(),
        graph: sample.graph,
    }
}

fn small_noise_config(reps: usize) -> BenchConfig {
    BenchConfig {
        seed: Some(5),
        repetitions: Some(reps),
        label_counts: Some(vec![4, 10]),
        noise: Some(vec![0.0, 0.2]),
        ..BenchConfig::default()
    }
}

#[test]
fn accuracy_counting() {
    let truth: Vec<i8> = (0..12).map(|i| if i < 6 { 1 } else { -1 }).collect();
    let labels = common::labels_at(12, &[(0, 1), (11, -1)]);
    let aligned = scores(truth.iter().map(|&t| t as f64).collect());
    let flipped = scores(truth.iter().map(|&t| -(t as f64)).collect());
    assert_eq!(bench::accuracy(&aligned, &truth, &labels).unwrap(), 1.0);
    assert_eq!(bench::accuracy(&flipped, &truth, &labels).unwrap(), 0.0);
    let mut half = aligned.scores.clone();
    for v in half.iter_mut().take(6).skip(1) {
        *v = -*v;
    }
    assert_eq!(bench::accuracy(&scores(half), &truth, &labels).unwrap(), 0.5);
    let everyone = robustgc::LabelVector::new(truth.clone()).unwrap();
    assert!(matches!(
        bench::accuracy(&aligned, &truth, &everyone),
        Err(Error::EmptyEvaluationSet)
    ));
}

#[test]
fn default_grids() {
    let ctx = SpectralContext::new(common::chain(10, 0.1)).unwrap();
    let grid = GridSpec::for_context(&ctx, 0.9);
    assert_eq!(grid.zhou.len(), 51);
    assert_eq!(grid.belkin, (1..=20).collect::<Vec<_>>());
    assert_eq!(grid.robust.len(), 52);
    assert!(grid.robust.iter().all(|&g| g > 0.0 && g < ctx.lambda1()));
    assert_eq!(*grid.robust.last().unwrap(), 0.9 * ctx.lambda1());
}

#[test]
fn single_point_grid_returns_that_point() {
    let ctx = SpectralContext::new(common::chain(10, 0.1)).unwrap();
    let (_, truth) = data::chain_graph(10, 0.1).unwrap();
    let labels = common::labels_at(20, &[(2, 1), (17, -1)]);
    let gamma = 0.3 * ctx.lambda1();
    let grid = GridSpec {
        zhou: vec![],
        belkin: vec![],
        robust: vec![gamma],
    };
    let v = bench::perfect_validation(&ctx, &labels, &truth, Method::Robust, &grid, None, &SolveOptions::default())
        .unwrap();
    assert_eq!(v.param, gamma);
    assert_eq!(v.accuracy, 1.0);
}

#[test]
fn two_point_grid_picks_the_better_solve() {
    let ctx = SpectralContext::new(common::random_graph_in(2, 40, 40)).unwrap();
    let truth: Vec<i8> = (0..40).map(|i| if i < 20 { 1 } else { -1 }).collect();
    let labels = common::labels_at(40, &[(0, 1), (1, 1), (39, -1)]);
    let grid_pts = [1e-3, 1e2];
    let accs: Vec<f64> = grid_pts
        .iter()
        .map(|&g| bench::accuracy(&classify::solve_zhou_gc(&ctx, &labels, g).unwrap(), &truth, &labels).unwrap())
        .collect();
    let grid = GridSpec {
        zhou: grid_pts.to_vec(),
        belkin: vec![],
        robust: vec![],
    };
    let v = bench::perfect_validation(&ctx, &labels, &truth, Method::Zhou, &grid, None, &SolveOptions::default())
        .unwrap();
    let best = if accs[1] > accs[0] { 1 } else { 0 };
    assert_eq!(v.accuracy, accs[best]);
    assert_eq!(v.param, grid_pts[best]);
}

#[test]
fn failed_points_are_skipped() {
    let ctx = SpectralContext::new(common::chain(10, 0.1)).unwrap();
    let (_, truth) = data::chain_graph(10, 0.1).unwrap();
    let labels = common::labels_at(20, &[(2, 1), (17, -1)]);
    let grid = GridSpec {
        zhou: vec![],
        belkin: vec![],
        robust: vec![2.0 * ctx.lambda1(), 0.5 * ctx.lambda1()],
    };
    let opts = SolveOptions::default();
    let v = bench::perfect_validation(&ctx, &labels, &truth, Method::Robust, &grid, None, &opts).unwrap();
    assert_eq!(v.param, 0.5 * ctx.lambda1());
    let all_bad = GridSpec {
        robust: vec![2.0 * ctx.lambda1()],
        ..grid
    };
    assert!(matches!(
        bench::perfect_validation(&ctx, &labels, &truth, Method::Robust, &all_bad, None, &opts),
        Err(Error::AllGridPointsFailed { .. })
    ));
}

#[test]
fn noiseless_low_connectivity_is_perfect() {
    let ds = low_connectivity();
    let ctx = SpectralContext::new(ds.graph.clone()).unwrap();
    let grid = GridSpec::for_context(&ctx, 0.9);
    for seed in 0..5 {
        let labels = data::sample_labels(&ds.truth, 10, seed).unwrap();
        let v = bench::perfect_validation(
            &ctx,
            &labels,
            &ds.truth,
            Method::Robust,
            &grid,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(v.accuracy, 1.0, "seed {seed}");
    }
}

#[test]
fn noise_experiment_invariants_and_determinism() {
    let cfg = small_noise_config(2);
    let a = bench::run_on(&cfg, ExperimentKind::Noise, vec![low_connectivity()]).unwrap();
    let b = bench::run_on(&cfg, ExperimentKind::Noise, vec![low_connectivity()]).unwrap();
    assert_eq!(a.results_csv(), b.results_csv());
    assert_eq!(a.aggregate_csv(), b.aggregate_csv());
    assert_eq!(a.rows.len(), 2 * 2 * 2 * 4);
    assert!(a.results_csv().starts_with("dataset,method,n_labels,noise,rep,accuracy,param\n"));
    assert!(a.aggregate_csv().starts_with("dataset,method,n_labels,noise,mean,std,min,max\n"));
    let lambda1 = SpectralContext::new(low_connectivity().graph).unwrap().lambda1();
    for r in &a.rows {
        assert!((0.0..=1.0).contains(&r.accuracy));
        if r.method == Method::Robust {
            assert!(r.param < lambda1);
            let pf = a
                .rows
                .iter()
                .find(|p| p.method == Method::PfRobust && p.n_labels == r.n_labels && p.noise == r.noise && p.rep == r.rep)
                .unwrap();
            assert!(pf.accuracy <= r.accuracy + 1e-12);
        }
    }
}

#[test]
fn karate_half_has_seventeen_labels() {
    assert_eq!(SizeRule::FloorSkipZero.size(0.5, 34), Some(17));
    assert_eq!(SizeRule::FloorSkipZero.size(0.01, 34), None);
    assert_eq!(SizeRule::FloorSkipZero.size(0.05, 34), Some(2));
    assert_eq!(SizeRule::RoundMinTwo.size(0.01, 34), Some(2));
    let cfg = BenchConfig {
        repetitions: Some(1),
        methods: Some(vec![Method::PfRobust]),
        ..BenchConfig::default()
    };
    let res = bench::run_accuracy_experiment(&cfg, std::path::Path::new(".")).unwrap();
    let sizes: Vec<usize> = res.rows.iter().map(|r| r.n_labels).collect();
    assert_eq!(sizes, vec![2, 3, 6, 17]);
}

#[test]
fn karate_two_labels_robust() {
    let cfg = BenchConfig {
        repetitions: Some(20),
        methods: Some(vec![Method::Robust]),
        label_counts: Some(vec![2]),
        ..BenchConfig::default()
    };
    let res = bench::run_accuracy_experiment(&cfg, std::path::Path::new(".")).unwrap();
    let cell = res.cell("karate", Method::Robust, 2, 0.0).unwrap();
    assert!(cell.mean >= 0.95, "mean {}", cell.mean);
}

/// Over five independent graph draws the 150-label synth cell stays near perfect.
#[test]
fn synth_many_labels_near_perfect() {
    let datasets: Vec<Dataset> = (1..=5u64)
        .map(|seed| {
            let sample = data::sbm_generate(&SbmSpec::uniform(3, 100, 0.3, 0.05, seed)).unwrap();
            Dataset {
                name: format!("synth{seed}"),
                truth: sample.truth_with(&[0]),
                graph: sample.graph,
            }
        })
        .collect();
    let cfg = BenchConfig {
        repetitions: Some(20),
        methods: Some(vec![Method::Robust]),
        label_counts: Some(vec![150]),
        ..BenchConfig::default()
    };
    let res = bench::run_on(&cfg, ExperimentKind::Accuracy, datasets).unwrap();
    let mean = res.rows.iter().map(|r| r.accuracy).sum::<f64>() / res.rows.len() as f64;
    assert!(mean >= 0.995, "mean {mean}");
}

#[test]
fn config_round_trip_and_validation() {
    let text = r#"
seed = 3
repetitions = 4
methods = ["robust", "pf_robust"]
label_counts = [4]

[[datasets]]
name = "c"
kind = "chain"
n_per_side = 6
"#;
    let cfg = BenchConfig::from_toml(text).unwrap();
    assert_eq!(cfg.datasets[0].source, DatasetSource::Chain { n_per_side: 6, weak: 0.1 });
    let resolved = cfg.clone().resolve(ExperimentKind::Noise).unwrap();
    assert_eq!(resolved.noise.as_deref(), Some(&[0.0, 0.1, 0.2, 0.3, 0.4][..]));
    let back = BenchConfig::from_toml(&resolved.to_toml().unwrap()).unwrap();
    assert_eq!(back, resolved);
    assert!(BenchConfig::from_toml("bogus = 1").is_err());
    let bad_eta = BenchConfig {
        eta: Some(1.0),
        ..BenchConfig::default()
    };
    assert!(matches!(bad_eta.resolve(ExperimentKind::Noise), Err(Error::EtaOutOfRange(_))));
    let dup = BenchConfig {
        datasets: vec![
            DatasetConfig { name: "k".into(), source: DatasetSource::Karate },
            DatasetConfig { name: "k".into(), source: DatasetSource::Karate },
        ],
        ..BenchConfig::default()
    };
    assert!(dup.resolve(ExperimentKind::Accuracy).is_err());
}

#[test]
fn edge_list_dataset_loads_relative_to_base() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.tsv"), "0\t1\t1\n1\t2\t1\n2\t3\t0.1\n3\t4\t1\n4\t5\t1\n").unwrap();
    std::fs::write(dir.path().join("t.csv"), "node,label\n0,1\n1,1\n2,1\n3,-1\n4,-1\n5,-1\n").unwrap();
    let cfg = DatasetConfig {
        name: "path".into(),
        source: DatasetSource::EdgeList {
            path: "g.tsv".into(),
            truth: "t.csv".into(),
            largest_component: false,
        },
    };
    let ds = cfg.load(dir.path()).unwrap();
    assert_eq!(ds.graph.n(), 6);
    assert_eq!(ds.truth, vec![1, 1, 1, -1, -1, -1]);
}

#[test]
fn outputs_written_with_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_noise_config(1).resolve(ExperimentKind::Noise).unwrap();
    let res = bench::run_on(&cfg, ExperimentKind::Noise, vec![low_connectivity()]).unwrap();
    let files = bench::write_outputs(dir.path(), ExperimentKind::Noise, &cfg, &res).unwrap();
    assert!(files.results.ends_with("noise_results.csv"));
    assert_eq!(std::fs::read_to_string(&files.results).unwrap(), res.results_csv());
    let cfg_back = BenchConfig::read(&files.config).unwrap();
    assert_eq!(cfg_back, cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A superset grid never validates to a lower accuracy.
    #[test]
    fn validation_monotone_under_refinement(seed in 0u64..10_000, keep in prop::collection::vec(any::<bool>(), 52)) {
        let g = common::random_graph_in(seed, 16, 48);
        let n = g.n();
        let truth: Vec<i8> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
        let ctx = SpectralContext::new(g).unwrap();
        let labels = data::sample_labels(&truth, 4, seed).unwrap();
        let full = GridSpec::for_context(&ctx, 0.9);
        let coarse = GridSpec {
            zhou: full.zhou.iter().zip(&keep).filter(|(_, k)| **k).map(|(z, _)| *z).collect(),
            belkin: full.belkin.iter().zip(&keep).filter(|(_, k)| **k).map(|(b, _)| *b).collect(),
            robust: full.robust.iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| *r).collect(),
        };
        let eig = spectral::smallest_eigenpairs(&ctx, n.min(51)).unwrap();
        let opts = SolveOptions::default();
        for method in [Method::Zhou, Method::Belkin, Method::Robust] {
            let fine = bench::perfect_validation(&ctx, &labels, &truth, method, &full, Some(&eig), &opts).unwrap();
            if let Ok(c) = bench::perfect_validation(&ctx, &labels, &truth, method, &coarse, Some(&eig), &opts) {
                prop_assert!(fine.accuracy >= c.accuracy);
            }
        }
    }
}
