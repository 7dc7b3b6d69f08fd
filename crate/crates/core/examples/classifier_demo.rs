//! Class-wise unlearning on Gaussian blobs with the four fine-tuning
//! objectives.

use unlearn_lab::classifier::{prepare_task, run_unlearning, ClassTaskSpec, FtConfig, FtVariant};

fn main() -> unlearn_lab::Result<()> {
    let spec = ClassTaskSpec::default();
    let base = FtConfig::default();
    let task = prepare_task(&spec, 0, &base)?;
    let r = task.retrained_metrics;
    println!("{:<10} UA {:.3} RA {:.3} TA {:.3}", "retrain", r.ua, r.ra, r.ta);
    for variant in FtVariant::ALL {
        let (_, m) = run_unlearning(&task, &base.with_variant(variant, 0.5))?;
        println!("{:<10} UA {:.3} RA {:.3} TA {:.3} ({:.3}s)", variant.name(), m.ua, m.ra, m.ta, m.runtime_seconds);
    }
    Ok(())
}
