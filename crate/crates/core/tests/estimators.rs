use disfom::estimator::{correlated_difference, minibatch_estimate, EstimatorKind, EstimatorState};
use disfom::problem::{StochasticProblem, SyntheticQP};
use disfom::rng::substream;
use rand::{Rng, RngCore};

fn qp() -> SyntheticQP {
    SyntheticQP::generate(32, 77, 3.0, 3.0, 2.5).unwrap()
}

fn unit_direction(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, 9);
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// z-score of the mean of `draws` projected on `dir` against `target`.
fn z_score(draws: &[Vec<f64>], dir: &[f64], target: &[f64]) -> f64 {
    let proj: Vec<f64> = draws.iter().map(|g| dot(g, dir)).collect();
    let n = proj.len() as f64;
    let mean = proj.iter().sum::<f64>() / n;
    let var = proj.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean - dot(target, dir)) / (var / n).sqrt()
}

#[test]
fn single_sample_minibatch_matches_sample_gradient() {
    let qp = qp();
    let x = vec![0.3; 32];
    let mut a = substream(5, 0);
    let g = minibatch_estimate(&qp, &x, 1, &mut a).unwrap();
    // Reproduce the draw: batch key from the caller's stream, sample 0 from stream 0 of that key.
    let mut b = substream(5, 0);
    let key = b.next_u64();
    let sample = qp.draw_sample(&mut substream(key, 0));
    assert_eq!(g, qp.stochastic_gradient(&x, &sample).unwrap());
}

#[test]
fn minibatch_is_unbiased() {
    let qp = qp();
    let x: Vec<f64> = (0..32).map(|i| 0.1 * (i % 5) as f64 - 0.2).collect();
    let truth = qp.gradient(&x).unwrap();
    let mut rng = substream(6, 0);
    let draws: Vec<Vec<f64>> = (0..4000).map(|_| minibatch_estimate(&qp, &x, 5, &mut rng).unwrap()).collect();
    for seed in [1, 2] {
        let z = z_score(&draws, &unit_direction(32, seed), &truth);
        assert!(z.abs() < 3.0, "z = {z}");
    }
}

#[test]
fn checkpoint_estimate_is_unbiased() {
    let qp = qp();
    let x = vec![-0.4; 32];
    let truth = qp.gradient(&x).unwrap();
    let kind = EstimatorKind::VarianceReduced { batch: 4, checkpoint_batch: 20, interval: 5 };
    let mut rng = substream(7, 0);
    let draws: Vec<Vec<f64>> =
        (0..2000).map(|_| EstimatorState::new(kind).unwrap().estimate(&qp, 1, &x, &mut rng).unwrap()).collect();
    let z = z_score(&draws, &unit_direction(32, 3), &truth);
    assert!(z.abs() < 3.0, "z = {z}");
}

#[test]
fn off_checkpoint_is_conditionally_unbiased() {
    let qp = qp();
    let anchor_x = vec![0.5; 32];
    let x: Vec<f64> = (0..32).map(|i| if i % 2 == 0 { 1.0 } else { -0.7 }).collect();
    let kind = EstimatorKind::VarianceReduced { batch: 6, checkpoint_batch: 50, interval: 10 };
    let mut st = EstimatorState::new(kind).unwrap();
    let mut rng = substream(8, 0);
    st.estimate(&qp, 1, &anchor_x, &mut rng).unwrap();
    let anchor_g = st.anchor().unwrap().g.clone();
    let gx = qp.gradient(&x).unwrap();
    let ga = qp.gradient(&anchor_x).unwrap();
    let target: Vec<f64> = (0..32).map(|i| gx[i] - ga[i] + anchor_g[i]).collect();
    let draws: Vec<Vec<f64>> = (0..3000)
        .map(|_| {
            let mut s = st.clone();
            s.estimate(&qp, 2, &x, &mut rng).unwrap()
        })
        .collect();
    for seed in [4, 5] {
        let z = z_score(&draws, &unit_direction(32, seed), &target);
        assert!(z.abs() < 3.0, "z = {z}");
    }
}

#[test]
fn correlated_pairs_have_smaller_spread_than_independent_ones() {
    let qp = qp();
    let x = vec![0.2; 32];
    let y = vec![0.21; 32];
    let mut rng = substream(9, 0);
    let paired: f64 = (0..200)
        .map(|_| correlated_difference(&qp, &x, &y, 1, &mut rng).unwrap().iter().map(|v| v * v).sum::<f64>())
        .sum();
    let independent: f64 = (0..200)
        .map(|_| {
            let a = minibatch_estimate(&qp, &x, 1, &mut rng).unwrap();
            let b = minibatch_estimate(&qp, &y, 1, &mut rng).unwrap();
            a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>()
        })
        .sum();
    assert!(paired * 100.0 < independent);
}

#[test]
fn sample_accounting_matches_schedule() {
    let qp = SyntheticQP::generate(16, 1, 3.0, 3.0, 2.5).unwrap();
    let x = vec![0.0; 16];
    for (k_total, q, m, m1) in [(1, 9, 2, 5), (9, 9, 2, 5), (10, 9, 2, 5), (23, 4, 3, 7), (12, 1, 3, 7)] {
        let kind = EstimatorKind::VarianceReduced { batch: m, checkpoint_batch: m1, interval: q };
        let mut st = EstimatorState::new(kind).unwrap();
        let mut rng = substream(10, 0);
        for k in 1..=k_total {
            st.estimate(&qp, k, &x, &mut rng).unwrap();
        }
        let c = k_total.div_ceil(q);
        assert_eq!(st.samples_used(), (c * m1 + (k_total - c) * m) as u64);
        assert_eq!(st.sfo_calls(), (c * m1 + 2 * (k_total - c) * m) as u64);
    }
}

#[test]
fn anchor_moves_at_each_checkpoint() {
    let qp = SyntheticQP::generate(16, 1, 3.0, 3.0, 2.5).unwrap();
    let kind = EstimatorKind::VarianceReduced { batch: 2, checkpoint_batch: 4, interval: 3 };
    let mut st = EstimatorState::new(kind).unwrap();
    let mut rng = substream(11, 0);
    for k in 1..=10 {
        let x = vec![k as f64 * 0.01; 16];
        st.estimate(&qp, k, &x, &mut rng).unwrap();
        let a = st.anchor().unwrap();
        assert_eq!(a.k, disfom::estimator::checkpoint_index(k, 3));
        assert_eq!(a.x[0], a.k as f64 * 0.01);
    }
}
