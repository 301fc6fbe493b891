//! Trains every variant on synthetic data over several seeds and prints a summary.
//!
//! ```text
//! cargo run --release --example ablation -- [SEEDS] [GENERATOR_JSON_OVERRIDES] [HYPERPARAM_JSON_OVERRIDES]
//! cargo run --release --example ablation -- 5 '{"noise_sigma": 1.5}' '{"c1": 1e-3}'
//! ```

use std::time::Instant;

use lbsvm::baselines::{avg_frame_accuracy, train_frame_svm, Voting};
use lbsvm::evalreport::{
    default_fractions, evaluate_with, monotonicity_report, prefix_curve_with, LatentClassifier,
    MonotonicityLabels, VotingClassifier, DEFAULT_MONOTONICITY_TOL,
};
use lbsvm::nrbm::{train, TrainOptions};
use lbsvm::objective::{Hyperparams, Subsampling};
use lbsvm::seqdata::{generate_synthetic, GeneratorConfig, Split};
use lbsvm::Variant;

fn merged<T: serde::Serialize + serde::de::DeserializeOwned>(base: T, overrides: Option<&String>) -> T {
    let Some(text) = overrides.filter(|t| !t.trim().is_empty()) else { return base };
    let mut value = serde_json::to_value(&base).unwrap();
    let patch: serde_json::Value = serde_json::from_str(text).expect("overrides must be JSON");
    for (k, v) in patch.as_object().expect("overrides must be an object") {
        value[k.as_str()] = v.clone();
    }
    serde_json::from_value(value).expect("invalid override")
}

fn main() -> lbsvm::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: u64 = args.first().map_or(5, |s| s.parse().expect("SEEDS must be an integer"));
    let base_gen = merged(GeneratorConfig::default(), args.get(1));
    let base_hp = merged(Hyperparams::default(), args.get(2));
    println!("generator {}", serde_json::to_string(&base_gen).unwrap());
    println!("hyperparams {}", serde_json::to_string(&base_hp).unwrap());
    println!("seed scsvm bsvm lbsvm avg_frame accum_soft | decreases lbsvm soft | violations scsvm lbsvm | secs");

    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut sums = [0.0; 5];
    let fractions = default_fractions();
    let mut lbsvm_curve = vec![0.0; fractions.len()];
    let mut soft_curve = vec![0.0; fractions.len()];
    for seed in 0..seeds {
        let clock = Instant::now();
        let ds = generate_synthetic(&GeneratorConfig { seed, ..base_gen.clone() })?;
        let (tr, te) = (ds.subset(Split::Train), ds.subset(Split::Test));
        let opts = TrainOptions { seed, threads };
        let mut acc = Vec::new();
        let mut rates = Vec::new();
        let mut lbsvm_decreases = 0;
        for variant in [Variant::Scsvm, Variant::Bsvm, Variant::Lbsvm] {
            let flags = variant.flags();
            let hp = Hyperparams {
                selected: if flags.latent_on { base_hp.selected } else { base_hp.sampled },
                ..base_hp.clone()
            };
            let out = train(&tr, &Subsampling::Proportional, flags, &hp, opts)?;
            let space = hp.latent_space(flags)?;
            let clf = LatentClassifier { params: &out.model, space: &space };
            acc.push(evaluate_with(&clf, &te)?.accuracy);
            if variant == Variant::Lbsvm {
                let curve = prefix_curve_with(&clf, &te, &fractions)?;
                lbsvm_decreases = curve.decreases();
                lbsvm_curve.iter_mut().zip(&curve.accuracies).for_each(|(s, a)| *s += a);
            }
            if variant != Variant::Bsvm {
                let rep = monotonicity_report(
                    &out.model,
                    &space,
                    &te,
                    &Subsampling::Proportional,
                    DEFAULT_MONOTONICITY_TOL,
                    MonotonicityLabels::Predicted,
                )?;
                rates.push(rep.rate());
            }
        }
        let frame_hp = Hyperparams { selected: base_hp.sampled, ..base_hp.clone() };
        let (fm, _) = train_frame_svm(&tr, &frame_hp, opts)?;
        acc.push(avg_frame_accuracy(&fm, &te)?);
        let soft = VotingClassifier { model: &fm, voting: Voting::Soft };
        acc.push(evaluate_with(&soft, &te)?.accuracy);
        let curve = prefix_curve_with(&soft, &te, &fractions)?;
        let soft_decreases = curve.decreases();
        soft_curve.iter_mut().zip(&curve.accuracies).for_each(|(s, a)| *s += a);
        for (s, a) in sums.iter_mut().zip(&acc) {
            *s += a;
        }
        println!(
            "{seed} {:.3} {:.3} {:.3} {:.3} {:.3} | {lbsvm_decreases} {soft_decreases} | {:.4} {:.4} | {:.1}",
            acc[0],
            acc[1],
            acc[2],
            acc[3],
            acc[4],
            rates[0],
            rates[1],
            clock.elapsed().as_secs_f64()
        );
    }
    let n = seeds as f64;
    println!(
        "mean {:.3} {:.3} {:.3} {:.3} {:.3}",
        sums[0] / n,
        sums[1] / n,
        sums[2] / n,
        sums[3] / n,
        sums[4] / n
    );
    for (name, curve) in [("lbsvm", &lbsvm_curve), ("soft", &soft_curve)] {
        let line: Vec<String> = curve.iter().map(|a| format!("{:.3}", a / n)).collect();
        println!("prefix {name} {}", line.join(" "));
    }
    Ok(())
}
