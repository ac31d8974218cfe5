use bulksample::sampler::{its_draws, ladies_seed_matrix, RowId, RowRng, StreamKey};
use bulksample::sparse::{norm_rows_ladies, norm_rows_sage, spgemm, SparseMatrix};
use bulksample::synth::{figure1_graph, random_graph};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Chi-square statistic of first-draw counts against `probs`.
fn first_draw_chi2(probs: &[f64], trials: u64, seed: u64) -> (f64, f64) {
    let mut counts = vec![0u64; probs.len()];
    for t in 0..trials {
        let key = StreamKey {
            seed,
            epoch: t,
            layer: 0,
        };
        let mut rng = RowRng::new(key, RowId::new(0, 0));
        counts[its_draws(probs, 1, &mut rng)[0]] += 1;
    }
    let chi2 = probs
        .iter()
        .zip(&counts)
        .map(|(&p, &o)| {
            let e = p * trials as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let crit = ChiSquared::new((probs.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    (chi2, crit)
}

fn row_probs(p: &SparseMatrix, r: usize) -> Vec<f64> {
    p.row(r).1.to_vec()
}

#[test]
fn first_draws_follow_ladies_row() {
    let g = figure1_graph();
    let q = ladies_seed_matrix(&[vec![1, 5]], 6).unwrap();
    let p = norm_rows_ladies(&spgemm(&q, g.adjacency()).unwrap()).unwrap();
    let (chi2, crit) = first_draw_chi2(&row_probs(&p, 0), 100_000, 3);
    assert!(chi2 < crit, "chi2 {chi2} >= {crit}");
}

#[test]
fn first_draws_follow_random_rows() {
    let g = random_graph(32, 6, 12).unwrap();
    let batch: Vec<usize> = (0..8).collect();
    let q = ladies_seed_matrix(&[batch], 32).unwrap();
    let a = spgemm(&q, g.adjacency()).unwrap();
    for (i, p) in [norm_rows_ladies(&a).unwrap(), norm_rows_sage(&a).unwrap()]
        .iter()
        .enumerate()
    {
        let probs = row_probs(p, 0);
        assert!(probs.len() > 2);
        let (chi2, crit) = first_draw_chi2(&probs, 100_000, 40 + i as u64);
        assert!(chi2 < crit, "chi2 {chi2} >= {crit}");
    }
}

#[test]
fn draws_are_distinct_and_exhaust_when_s_is_large() {
    let probs = [0.1, 0.2, 0.3, 0.4];
    for t in 0..200 {
        let key = StreamKey {
            seed: 9,
            epoch: 0,
            layer: t,
        };
        let mut rng = RowRng::new(key, RowId::new(1, 2));
        let mut d = its_draws(&probs, 3, &mut rng);
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 3);
    }
    let key = StreamKey {
        seed: 0,
        epoch: 0,
        layer: 0,
    };
    let mut rng = RowRng::new(key, RowId::flat(0));
    assert_eq!(its_draws(&probs, 9, &mut rng), vec![0, 1, 2, 3]);
}
