use unlearn_lab::classifier::{
    alpha_sweep, gen_class_task, pretrain, pretrain_traced, prepare_task, relabel_forget, run_unlearning,
    unlearn_ft_traced, ClassTaskSpec, FtConfig, FtVariant, RelabelScheme,
};
use unlearn_lab::metrics::accuracy;
use unlearn_lab::LabError;

fn small_spec() -> ClassTaskSpec {
    ClassTaskSpec { per_class: 40, ..Default::default() }
}

#[test]
fn separable_blobs_train_to_high_accuracy() {
    let (train, test) = gen_class_task(5, 100, 20, 6.0, 0).unwrap();
    let model = pretrain(&train, &FtConfig::default()).unwrap();
    assert!(accuracy(&model, &train).unwrap() >= 0.99);
    assert!(accuracy(&model, &test).unwrap() >= 0.95);
}

#[test]
fn small_steps_never_increase_the_loss() {
    let (train, _) = gen_class_task(3, 30, 5, 3.0, 1).unwrap();
    let cfg = FtConfig { epochs: 200, step_size: 0.05, ..Default::default() };
    let trace = pretrain_traced(&train, &cfg).unwrap();
    assert!(trace.losses.windows(2).all(|w| w[1] <= w[0] + 1e-12));

    let task = prepare_task(&small_spec(), 1, &FtConfig::default()).unwrap();
    let forget = task
        .forget
        .with_labels(relabel_forget(&task.forget.labels, 5, RelabelScheme::ShiftByOne).unwrap())
        .unwrap();
    for variant in FtVariant::ALL {
        let cfg = FtConfig { epochs: 100, step_size: 0.05, ..Default::default() }.with_variant(variant, 0.5);
        let trace = unlearn_ft_traced(&task.pretrained, &task.remain, &forget, &cfg).unwrap();
        assert!(trace.losses.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{}", variant.name());
    }
}

#[test]
fn relabeling_always_changes_the_label() {
    for classes in 2..8 {
        let labels: Vec<usize> = (0..classes).collect();
        let shifted = relabel_forget(&labels, classes, RelabelScheme::ShiftByOne).unwrap();
        assert!(labels.iter().zip(&shifted).all(|(a, b)| a != b && *b < classes));
    }
}

#[test]
fn naive_fine_tuning_barely_forgets() {
    let task = prepare_task(&small_spec(), 2, &FtConfig::default()).unwrap();
    let (_, naive) = run_unlearning(&task, &FtConfig::default()).unwrap();
    let (_, kl) = run_unlearning(&task, &FtConfig::default().with_variant(FtVariant::KlFt, 0.5)).unwrap();
    assert!(naive.ua + 0.3 <= task.retrained_metrics.ua);
    assert!(kl.ua >= 0.9);
    assert!(kl.ra >= naive.ra - 0.05);
}

#[test]
fn retain_weighted_objective_keeps_more_of_the_remaining_set() {
    let spec = small_spec();
    let seeds = [0, 1, 2];
    let alphas = [0.1, 0.5];
    let base = FtConfig::default();
    let ce = alpha_sweep(&spec, &base, FtVariant::CeFt, &alphas, &seeds).unwrap();
    let ice = alpha_sweep(&spec, &base, FtVariant::IceFt, &alphas, &seeds).unwrap();
    for alpha in alphas {
        let c = ce.summary(FtVariant::CeFt, alpha).unwrap();
        let i = ice.summary(FtVariant::IceFt, alpha).unwrap();
        assert!(i.mean.ra >= c.mean.ra, "alpha {alpha}: {} < {}", i.mean.ra, c.mean.ra);
    }
    assert_eq!(ce.rows.len(), alphas.len() * seeds.len());
}

#[test]
fn training_is_deterministic() {
    let a = prepare_task(&small_spec(), 5, &FtConfig::default()).unwrap();
    let b = prepare_task(&small_spec(), 5, &FtConfig::default()).unwrap();
    assert_eq!(a.pretrained, b.pretrained);
    let cfg = FtConfig::default().with_variant(FtVariant::CeFt, 0.3);
    assert_eq!(run_unlearning(&a, &cfg).unwrap().0, run_unlearning(&b, &cfg).unwrap().0);
}

#[test]
fn invalid_configs_are_rejected() {
    let task = prepare_task(&small_spec(), 0, &FtConfig { epochs: 5, ..Default::default() }).unwrap();
    let bad_alpha = FtConfig::default().with_variant(FtVariant::KlFt, 1.5);
    assert!(run_unlearning(&task, &bad_alpha).is_err());
    let bad_step = FtConfig { step_size: 0.0, ..Default::default() };
    assert!(matches!(run_unlearning(&task, &bad_step), Err(LabError::InvalidConfig(_))));
}
