//! Regularization weight sweep for the three regularized objectives.

use unlearn_lab::classifier::{alpha_sweep, ClassTaskSpec, FtConfig, FtVariant};

fn main() -> unlearn_lab::Result<()> {
    let spec = ClassTaskSpec::default();
    let alphas = [0.1, 0.2, 0.4, 0.6, 0.8];
    let seeds = [0, 1, 2, 3, 4];
    for variant in [FtVariant::KlFt, FtVariant::CeFt, FtVariant::IceFt] {
        let table = alpha_sweep(&spec, &FtConfig::default(), variant, &alphas, &seeds)?;
        for s in &table.summaries {
            println!(
                "{:<7} alpha {:.1}  UA {:.3}±{:.3}  RA {:.4}±{:.4}  TA {:.4}±{:.4}",
                variant.name(),
                s.alpha,
                s.mean.ua,
                s.std.ua,
                s.mean.ra,
                s.std.ra,
                s.mean.ta,
                s.std.ta
            );
        }
    }
    Ok(())
}
