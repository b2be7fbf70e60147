//! Trains the gravity GI-Net and its baseline on 10 samples and prints
//! train and test RMSE. Usage: `cargo run --release --example gravity_trial [seed]`.

use geomnet::net::{presets, train, Model, TrainConfig};
use geomnet::physics::{Dataset, GravityConfig, ProblemConfig, SplitSizes};

fn main() -> geomnet::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let sizes = SplitSizes { train: 10, val: 5, test: 10 };
    let ds = Dataset::generate(ProblemConfig::Gravity(GravityConfig::default()), seed, sizes)?;
    for name in ["gravity", "gravity-baseline"] {
        let model = Model::new(presets::preset(name)?)?;
        let cfg = TrainConfig { seed, ..Default::default() };
        let start = std::time::Instant::now();
        let result = train::train(&model, &ds.train, &ds.val, &cfg)?;
        let eval = model.evaluator(16)?;
        let tr = train::rmse(&eval, &result.params, &ds.train)?;
        let te = train::rmse(&eval, &result.params, &ds.test)?;
        println!(
            "{name}: {} epochs, best {}, train {tr:.4}, test {te:.4}, {:.1} s",
            result.history.len(),
            result.best_epoch,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
