use proptest::prelude::*;
use spmt_hybrid::eval::rmse;
use spmt_hybrid::fnn::{FnnModel, TrainConfig};
use spmt_hybrid::hybrid::{train_hybrid, FeatureSet, HybridModel, HybridTrainConfig, Wiring};
use spmt_hybrid::truth::{build_one, Dataset, TruthParameters};
use spmt_hybrid::{make_constant_profile, make_drive_cycle, DriveFamily, ParameterFile, Spmt};

const T_AMB: f64 = 298.15;

fn pf() -> ParameterFile {
    ParameterFile::lco_graphite()
}

fn random_model(wiring: Wiring, features: FeatureSet, seed: u64) -> HybridModel {
    let mut fnn = FnnModel::he_init(&[features.width(), 8, 8, 1], seed).unwrap();
    fnn.norm.mean = vec![5.0, 300.0, 0.5, 0.5, 0.5][..features.width()].to_vec();
    fnn.norm.std = vec![5.0, 2.0, 0.2, 0.2, 0.2][..features.width()].to_vec();
    HybridModel::new(wiring, features, pf(), fnn).unwrap()
}

#[test]
fn zero_network_gives_the_spmt_or_its_bias() {
    let pf = pf();
    let profile = make_drive_cycle(2, DriveFamily::UddsLike, pf.cell.capacity_ah(), 900).unwrap();
    let residual = HybridModel::new(
        Wiring::Residual,
        FeatureSet::Full,
        pf.clone(),
        FnnModel::zeros(&[5, 32, 32, 1]).unwrap(),
    )
    .unwrap();
    let p = residual.predict(0.8, &profile, T_AMB, T_AMB).unwrap();
    assert_eq!(p.v_hybrid, p.v_spmt());

    let mut fnn = FnnModel::zeros(&[5, 32, 32, 1]).unwrap();
    fnn.layers[2].biases[0] = 3.7;
    let cascade = HybridModel::new(Wiring::Cascade, FeatureSet::Full, pf, fnn).unwrap();
    let p = cascade.predict(0.8, &profile, T_AMB, T_AMB).unwrap();
    assert!(p.v_hybrid.iter().all(|&v| v == 3.7));
}

#[test]
fn network_never_feeds_back_into_the_spmt() {
    let pf = pf();
    let profile = make_drive_cycle(4, DriveFamily::Us06Like, pf.cell.capacity_ah(), 900).unwrap();
    let plain = Spmt::new(pf.cell.clone(), pf.solver)
        .unwrap()
        .simulate(0.7, &profile, T_AMB, T_AMB, profile.duration())
        .unwrap();
    for seed in 0..3 {
        for wiring in [Wiring::Residual, Wiring::Cascade] {
            let p = random_model(wiring, FeatureSet::Full, seed)
                .predict(0.7, &profile, T_AMB, T_AMB)
                .unwrap();
            assert_eq!(p.trace, plain);
        }
    }
}

#[test]
fn predictions_depend_only_on_the_past() {
    let pf = pf();
    let model = random_model(Wiring::Residual, FeatureSet::Full, 9);
    let mut profile =
        make_drive_cycle(6, DriveFamily::UddsLike, pf.cell.capacity_ah(), 1200).unwrap();
    let full = model.predict(0.75, &profile, T_AMB, T_AMB).unwrap();
    profile.samples.truncate(700);
    let head = model.predict(0.75, &profile, T_AMB, T_AMB).unwrap();
    assert_eq!(head.v_hybrid[..], full.v_hybrid[..head.v_hybrid.len()]);
    assert!(head.v_hybrid.len() >= 700);
}

#[test]
fn dataset_features_match_a_fresh_prediction() {
    let pf = pf();
    let profile = make_constant_profile(4.0, pf.cell.capacity_ah(), 900).unwrap();
    let ds = build_one(&TruthParameters::default(), &pf, &profile, 0.67).unwrap();
    for wiring in [Wiring::Residual, Wiring::Cascade] {
        let model = random_model(wiring, FeatureSet::Full, 3);
        let from_rows = model.predict_dataset(&ds).unwrap();
        let fresh = model.predict(ds.soc0, &profile, T_AMB, T_AMB).unwrap();
        assert_eq!(from_rows[..], fresh.v_hybrid[..from_rows.len()]);
    }
}

#[test]
fn feature_width_must_match_the_network() {
    let fnn = FnnModel::zeros(&[5, 4, 1]).unwrap();
    assert!(HybridModel::new(Wiring::Residual, FeatureSet::WithoutSoc, pf(), fnn).is_err());
}

fn small_sets(truth: &TruthParameters) -> Vec<Dataset> {
    let pf = pf();
    [(1.0, 0.7), (4.0, 0.6), (8.0, 0.74)]
        .into_iter()
        .map(|(rate, soc0)| {
            let p = make_constant_profile(rate, pf.cell.capacity_ah(), 1200).unwrap();
            build_one(truth, &pf, &p, soc0).unwrap()
        })
        .collect()
}

fn quick_config() -> HybridTrainConfig {
    HybridTrainConfig {
        hidden: vec![16, 16],
        fnn: TrainConfig {
            epochs: 60,
            patience: 60,
            ..TrainConfig::default()
        },
        ..HybridTrainConfig::default()
    }
    .with_seed(2)
}

fn worst_rmse(model: &HybridModel, sets: &[Dataset]) -> f64 {
    sets.iter()
        .map(|ds| {
            rmse(
                &ds.column(|r| r.v_true),
                &model.predict_dataset(ds).unwrap(),
            )
            .unwrap()
        })
        .fold(0.0, f64::max)
}

#[test]
fn zero_residual_trains_to_sub_millivolt_error() {
    let sets = small_sets(&TruthParameters::zero());
    let fit = |config: &HybridTrainConfig| {
        train_hybrid(
            Wiring::Residual,
            FeatureSet::Full,
            &sets,
            &pf(),
            config,
            None,
        )
        .unwrap()
        .model
    };
    // standardized constant targets fold back onto the constant itself
    assert!(worst_rmse(&fit(&quick_config()), &sets) < 1e-9);

    // raw targets: plain SGD shrinks the random initial output
    let raw = HybridTrainConfig {
        standardize_targets: false,
        ..quick_config()
    };
    let untrained = HybridTrainConfig {
        fnn: TrainConfig {
            epochs: 0,
            ..raw.fnn
        },
        ..raw.clone()
    };
    let before = worst_rmse(&fit(&untrained), &sets);
    let after = worst_rmse(&fit(&raw), &sets);
    assert!(after < 0.1 * before, "{after} vs {before} mV");
}

#[test]
fn residual_training_beats_the_spmt_and_round_trips() {
    let sets = small_sets(&TruthParameters::default());
    let config = quick_config();
    let out = train_hybrid(
        Wiring::Residual,
        FeatureSet::Full,
        &sets,
        &pf(),
        &config,
        Some("abc".into()),
    )
    .unwrap();
    let again = train_hybrid(
        Wiring::Residual,
        FeatureSet::Full,
        &sets,
        &pf(),
        &config,
        Some("abc".into()),
    )
    .unwrap();
    assert_eq!(out.model, again.model);

    let mut before = 0.0;
    let mut after = 0.0;
    for ds in &sets {
        let truth = ds.column(|r| r.v_true);
        before += rmse(&truth, &ds.column(|r| r.v_spmt)).unwrap();
        after += rmse(&truth, &out.model.predict_dataset(ds).unwrap()).unwrap();
    }
    assert!(after < 0.5 * before, "{after} vs {before}");

    let prov = out.model.provenance.as_ref().unwrap();
    assert_eq!(prov.dataset_manifest_hash.as_deref(), Some("abc"));
    assert_eq!(prov.epochs_run, out.training.history.len());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    std::fs::write(&path, out.model.to_json()).unwrap();
    let loaded = HybridModel::load(&path).unwrap();
    assert_eq!(loaded, out.model);
    assert_eq!(loaded.hash(), out.model.hash());
    assert_eq!(
        loaded.predict_dataset(&sets[1]).unwrap(),
        out.model.predict_dataset(&sets[1]).unwrap()
    );
}

#[test]
fn standardization_does_not_change_the_model_file_shape() {
    let sets = small_sets(&TruthParameters::default());
    let plain = HybridTrainConfig {
        standardize_targets: false,
        ..quick_config()
    };
    let a = train_hybrid(
        Wiring::Residual,
        FeatureSet::WithoutSoc,
        &sets,
        &pf(),
        &plain,
        None,
    )
    .unwrap();
    let b = train_hybrid(
        Wiring::Residual,
        FeatureSet::WithoutSoc,
        &sets,
        &pf(),
        &quick_config(),
        None,
    )
    .unwrap();
    assert_eq!(a.model.fnn.widths(), b.model.fnn.widths());
    assert_eq!(a.model.fnn.norm, b.model.fnn.norm);
    // reported validation error is in volts in both cases
    let last = b
        .training
        .history
        .iter()
        .map(|r| r.val_rmse)
        .fold(f64::INFINITY, f64::min);
    assert!((last - b.training.best_val_rmse).abs() <= 1e-12 || b.training.best_epoch == 0);
    assert!(b.training.best_val_rmse < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_wiring_adds_the_network_to_the_spmt(seed in 0u64..1000, soc0 in 0.3..0.95f64, rate in 0.5..6.0f64) {
        let pf = pf();
        let profile = make_constant_profile(rate, pf.cell.capacity_ah(), 120).unwrap();
        let residual = random_model(Wiring::Residual, FeatureSet::Full, seed);
        let cascade = HybridModel { wiring: Wiring::Cascade, ..residual.clone() };
        let r = residual.predict(soc0, &profile, T_AMB, T_AMB).unwrap();
        let c = cascade.predict(soc0, &profile, T_AMB, T_AMB).unwrap();
        for ((h, n), s) in r.v_hybrid.iter().zip(&c.v_hybrid).zip(r.v_spmt()) {
            prop_assert_eq!(*h, s + n);
        }
    }
}
