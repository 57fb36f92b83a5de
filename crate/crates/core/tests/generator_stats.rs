use msfair::marketplace::{generate, GeneratorConfig, Marketplace};

fn market(seed: u64, bias_beta: f64) -> Marketplace {
    generate(&GeneratorConfig {
        seed,
        bias_beta,
        ..GeneratorConfig::default()
    })
    .unwrap()
}

fn interactions(m: &Marketplace, c: usize) -> impl Iterator<Item = usize> + '_ {
    m.train_items(c).iter().chain(m.test_items(c)).copied()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn no_outcome_correlation_without_bias() {
    let mut rs = Vec::new();
    for seed in 1..=10 {
        let m = market(seed, 0.0);
        let mut freq = vec![0.0; m.items().len()];
        for c in m.consumers().iter().filter(|c| !c.protected) {
            for i in interactions(&m, c.id) {
                freq[i] += 1.0;
            }
        }
        let outcome: Vec<f64> = m.items().iter().map(|i| i.outcome).collect();
        rs.push(pearson(&outcome, &freq));
    }
    let mean = rs.iter().sum::<f64>() / rs.len() as f64;
    assert!(mean.abs() < 0.05, "mean r {mean}, per seed {rs:?}");
}

#[test]
fn unprotected_consumers_skew_to_high_outcomes() {
    let mut wins = 0;
    for seed in 1..=10 {
        let m = market(seed, 2.0);
        let mut sums = [(0.0, 0usize); 2];
        for c in m.consumers() {
            for i in interactions(&m, c.id) {
                let s = &mut sums[usize::from(c.protected)];
                s.0 += m.items()[i].outcome;
                s.1 += 1;
            }
        }
        let [unprotected, protected] = sums.map(|(s, n)| s / n as f64);
        if unprotected > protected {
            wins += 1;
        }
    }
    assert!(wins >= 9, "{wins}/10");
}

#[test]
fn class_sizes_follow_fractions() {
    let m = market(3, 2.0);
    assert_eq!(m.consumers().iter().filter(|c| c.protected).count(), 250);
    assert_eq!(m.n_protected_providers(), 5);
    assert!(m.consumers().iter().take(250).all(|c| c.protected));
    for c in m.consumers() {
        assert_eq!(m.train_items(c.id).len(), 16);
        assert_eq!(m.test_items(c.id).len(), 4);
    }
}
