#![allow(clippy::unnecessary_cast)] // `Real` may be f32

use psc_core::dataset::{fragment_len, gen_mutation_negative, mutate, sample_fragment, BuildConfig};
use psc_core::seq::{MonomerCode, ProteinSequence, Vocabulary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vocab() -> Vocabulary {
    Vocabulary::from_codes(["ALA", "GLY", "SER", "TRP"].iter().map(|c| MonomerCode::new(c).unwrap()).collect())
        .unwrap()
}

fn seq(n: usize) -> ProteinSequence {
    let v = vocab();
    ProteinSequence::new("s", (0..n).map(|i| v.codes()[i % 4]).collect()).unwrap()
}

/// Kolmogorov distance of `xs` to U(0, 1).
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn drawn_fractions_are_uniform() {
    let cfg = BuildConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000;
    let us: Vec<f64> = (0..n)
        .map(|_| {
            let f = sample_fragment(400, &cfg, &mut rng).fraction;
            assert!((0.05..=0.07).contains(&f));
            (f - 0.05) / 0.02
        })
        .collect();
    // Dvoretzky-Kiefer-Wolfowitz: P(D > eps) <= 2 exp(-2 n eps^2); eps for
    // a 1e-4 false-alarm rate.
    let eps = ((2.0f64 / 1e-4).ln() / (2.0 * n as f64)).sqrt();
    let d = ks_uniform(us);
    assert!(d < eps, "KS distance {d} >= {eps}");
}

#[test]
fn start_positions_cover_the_sequence_uniformly() {
    let cfg = BuildConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 10_000;
    let us: Vec<f64> = (0..n)
        .map(|_| {
            let f = sample_fragment(1_000, &cfg, &mut rng);
            (f.start as f64 + 0.5) / (1_000 - f.len + 1) as f64
        })
        .collect();
    let eps = ((2.0f64 / 1e-4).ln() / (2.0 * n as f64)).sqrt();
    assert!(ks_uniform(us) < eps);
}

#[test]
fn length_100_uses_five_to_seven_residues() {
    let cfg = BuildConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut seen = [false; 3];
    for _ in 0..2_000 {
        let f = sample_fragment(100, &cfg, &mut rng);
        assert!((5..=7).contains(&f.len), "{f:?}");
        seen[f.len - 5] = true;
    }
    assert_eq!(seen, [true; 3]);
}

#[test]
fn short_sequences_get_single_residue_fragments() {
    for u in [0.05, 0.06, 0.07] {
        assert_eq!(fragment_len(u, 10), 1);
        assert_eq!(fragment_len(u, 1), 1);
    }
    assert_eq!(fragment_len(0.05, 30), 2); // 1.5 rounds half up
    assert_eq!(fragment_len(0.07, 50), 4); // 3.5 rounds half up
}

#[test]
fn fixed_seed_gives_identical_mutants() {
    let cfg = BuildConfig::default();
    let base = seq(250);
    let v = vocab();
    let a = gen_mutation_negative(&base, &v, &cfg, &mut ChaCha8Rng::seed_from_u64(42));
    let b = gen_mutation_negative(&base, &v, &cfg, &mut ChaCha8Rng::seed_from_u64(42));
    assert_eq!(a, b);
    assert_eq!(a.joined(), b.joined());
    assert_eq!(a.id(), "s~mut");
}

#[test]
fn replacement_codes_are_uniform_over_the_vocabulary() {
    let cfg = BuildConfig::default();
    let v = vocab();
    let base = seq(1_000);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut counts = [0u64; 4];
    for _ in 0..500 {
        let (m, f) = mutate(&base, &v, &cfg, &mut rng);
        for t in &m.tokens()[f.start..f.start + f.len] {
            counts[v.index_of(t).unwrap() as usize - 1] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / 4.0;
    // Pearson chi-square, 3 degrees of freedom; 16.27 is the 0.999 quantile.
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < 16.27, "chi2 {chi2} for {counts:?}");
}
