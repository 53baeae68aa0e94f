//! Forward noising and reverse sampling with an untrained noise network.
//!
//! `cargo run --example diffusion_sampler`

use diffcarl::codec::ActionCodec;
use diffcarl::diffusion::{
    build_schedule, forward_sample, sample_policy, sample_policy_batch, NoiseNet, NoiseNetSpec,
    ReverseMean,
};
use diffcarl::rng::seeded;
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

fn main() -> diffcarl::Result<()> {
    let schedule = build_schedule(10, 0.1, 10.0)?;
    for k in [1, 5, 10] {
        println!(
            "k={k:2} beta={:.4} alpha_bar={:.4}",
            schedule.beta(k),
            schedule.alpha_bar(k)
        );
    }

    let mut rng = seeded(0);
    let x0 = [1.0, -1.0];
    let n = 20_000;
    let mut mean = [0.0; 2];
    for _ in 0..n {
        let eps: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
        let x = forward_sample(&x0, 10, &eps, &schedule)?;
        mean[0] += x[0] / n as f64;
        mean[1] += x[1] / n as f64;
    }
    let scale = schedule.alpha_bar(10).sqrt();
    println!(
        "noised mean after 10 steps {mean:.3?}, closed form [{:.3}, {:.3}]",
        scale * x0[0],
        scale * x0[1]
    );

    let codec = ActionCodec::default();
    let spec = NoiseNetSpec {
        action_dim: codec.len(),
        obs_dim: 4,
        time_dim: 16,
        time_hidden: 32,
        hidden: 128,
    };
    let net = NoiseNet::new(spec, &mut rng);
    let state = [0.2, -0.5, 1.1, 0.0];
    let p = sample_policy(&state, &net, &schedule, &mut rng, 1.0)?;
    println!(
        "literal reverse chain: max prob {:.3}",
        p.probs.iter().fold(0.0f64, |a, b| a.max(*b))
    );
    let states = Array2::from_shape_vec((1, 4), state.to_vec()).expect("one row");
    for temperature in [1.0, 0.1] {
        let (probs, _) = sample_policy_batch(
            states.view(),
            &net,
            &schedule,
            ReverseMean::SquashedX0 { bound: 1.0 },
            &mut rng,
            temperature,
        )?;
        let row = probs.row(0);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|a, b| row[*b].total_cmp(&row[*a]));
        let top: Vec<String> = order[..3]
            .iter()
            .map(|&i| format!("{i}:{:.3}", row[i]))
            .collect();
        println!("squashed chain, temperature {temperature}: top actions {top:?}");
    }
    Ok(())
}
