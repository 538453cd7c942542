//! Edge-aware training loss: squared error plus a gradient-difference term,
//! with its analytic gradient checked against central finite differences.
//!
//! Run with: `cargo run --example ec_loss_gradcheck`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereobench::diffusion::{
    ec_loss, ec_loss_grad, ec_loss_grad_fd, EcLossConfig, LatentRole, LatentTensor,
};
use stereobench::Result;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (c, h, w) = (4, 8, 8);
    let mut tensor = |role| -> Result<LatentTensor> {
        LatentTensor::from_data(
            c,
            h,
            w,
            (0..c * h * w).map(|_| rng.random_range(-2.0..2.0)).collect(),
            role,
        )
    };
    let pred = tensor(LatentRole::Prediction)?;
    let target = tensor(LatentRole::Clean)?;
    let cfg = EcLossConfig::default();

    let loss = ec_loss(&pred, &target, &cfg)?;
    println!("loss at a random (prediction, target) pair: {loss:.6}");

    // Analytic gradient vs central finite differences, elementwise.
    let analytic = ec_loss_grad(&pred, &target, &cfg)?;
    let numeric = ec_loss_grad_fd(&pred, &target, &cfg, 1e-5)?;
    let worst = analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(a, n)| {
            let scale = a.abs().max(n.abs()).max(1e-8);
            (a - n).abs() / scale
        })
        .fold(0.0f64, f64::max);
    println!("worst relative gradient error vs finite differences: {worst:.3e}");
    assert!(worst < 1e-4);

    // A constant offset has zero image gradient, so only the squared-error
    // term fires and the loss is exactly the square of the offset.
    for offset in [0.5, -1.25] {
        let shifted = LatentTensor::from_data(
            c,
            h,
            w,
            target.data().iter().map(|v| v + offset).collect(),
            LatentRole::Prediction,
        )?;
        let l = ec_loss(&shifted, &target, &cfg)?;
        println!("constant offset {offset:+.2}: loss = {l:.6} (expected {:.6})", offset * offset);
        assert!((l - offset * offset).abs() < 1e-12);
    }

    // The edge term never helps a mismatch: the loss is bounded below by
    // its plain squared-error component.
    let mse: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.data().len() as f64;
    println!("loss {loss:.6} >= plain squared-error term {mse:.6}");
    assert!(loss >= mse);
    Ok(())
}
