use modalpca::*;
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rand_distr::{Distribution, Normal};

fn gaussian_sample(seed: u64, n: usize, stds: &[f64]) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = stds.len();
    let mut cells = Vec::with_capacity(n * d);
    for _ in 0..n {
        for &s in stds {
            cells.push(Normal::new(0.0, s).unwrap().sample(&mut rng));
        }
    }
    DataMatrix::from_rows(n, d, &cells).unwrap()
}

fn main() {
    // (a) equivariance worst angle over 8 (seed, Q) pairs
    let worst: f64 = (0..8u64).into_par_iter().map(|seed| {
        let data = gaussian_sample(seed * 100 + 55, 1000, &[2.0, 1.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 8);
        let gauss = DMatrix::from_fn(3, 3, |_, _| rng.gen::<f64>() - 0.5);
        let q = gauss.qr().q();
        let rotated = DataMatrix::new(data.matrix() * q.transpose()).unwrap();
        let cfg = FitConfig { n_components: 2, ..FitConfig::default() };
        let base = fit(&data, &cfg).unwrap();
        let rot = fit(&rotated, &cfg).unwrap();
        base.components().iter().zip(rot.components()).map(|(b, r)| {
            let mapped = &q * b.direction.vector();
            mapped.dot(r.direction.vector()).abs().min(1.0).acos().to_degrees()
        }).fold(0.0f64, f64::max)
    }).reduce(|| 0.0f64, f64::max);
    println!("equivariance worst: {worst:.2} deg");

    // (b) d=10 medians
    let d = 10usize;
    for &eps in &[0.0, 0.2] {
        let dists: Vec<f64> = (0..50u64).into_par_iter().map(|seed| {
            let spec = ScenarioSpec::new(ScenarioFamily::GaussianDiag, d, 200, eps, seed * 7 + 1);
            let (data, _, truth) = generate(&spec).unwrap();
            let k = truth.rank();
            let cfg = FitConfig { n_components: d - k, seed, ..FitConfig::default() };
            let model = fit(&data, &cfg).unwrap();
            let pc = model.principal_subspace(k).unwrap();
            specdist(&pc, &truth).unwrap()
        }).collect();
        let mut s = dists.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!("eps={eps}: median {:.4} mean {:.4} p90 {:.4}", s[25], dists.iter().sum::<f64>()/50.0, s[45]);
    }
}
