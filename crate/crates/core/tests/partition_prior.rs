mod common;

use mfm_core::partition_prior::{induced_kplus_prior, kplus_given_k, log_eppf_given_k};
use mfm_core::prior_k::{DirichletSchedule, PriorOnK, ScheduleKind};
use mfm_core::math::ln_gamma;
use mfm_core::ClusterSizes;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn conditional_law_matches_enumeration_small_cases() {
    for kind in [ScheduleKind::Static, ScheduleKind::Dynamic] {
        for &v in &[0.01, 1.0, 10.0] {
            let schedule = DirichletSchedule::new(kind, v).unwrap();
            for k in 1..=3 {
                for n in 1..=6 {
                    let oracle = common::enumerate_kplus(k, n, schedule.gamma_k(k));
                    let got = kplus_given_k(k, n, &schedule);
                    for (j, want) in oracle.iter().enumerate() {
                        assert!(
                            (got.prob(j + 1) - want).abs() < 1e-12,
                            "{schedule} K={k} n={n} j={}",
                            j + 1
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn eppf_sums_to_one_over_labelled_partitions() {
    // Three observations, K = 2. The value for given sizes already covers
    // every labelling of one unlabelled partition; there is one partition
    // with sizes (3) and three with sizes (2,1).
    let s = DirichletSchedule::Static { gamma: 1.0 };
    let one = ClusterSizes::new(vec![3]).unwrap();
    let two = ClusterSizes::new(vec![2, 1]).unwrap();
    let total = log_eppf_given_k(&one, 2, &s).unwrap().exp() + 3.0 * log_eppf_given_k(&two, 2, &s).unwrap().exp();
    assert!((total - 1.0).abs() < 1e-14, "{total}");
}

#[test]
fn simulated_filled_counts_match_exact_law() {
    // eta ~ Dirichlet_K(g), then 82 categorical draws: compare the mean of K+
    // and the probability of the most likely value within 3 standard errors.
    let n = 82;
    let reps = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for &k in &[3usize, 10, 30] {
        for &g in &[0.01, 1.0, 10.0] {
            let exact = kplus_given_k(k, n, &DirichletSchedule::Static { gamma: g });
            let mut hits = vec![0usize; k + 1];
            for _ in 0..reps {
                let w = common::log_dirichlet(k, g, &mut rng);
                hits[common::filled_after_draws(&w, n, &mut rng)] += 1;
            }
            let values: Vec<f64> = hits
                .iter()
                .enumerate()
                .flat_map(|(j, &c)| std::iter::repeat_n(j as f64, c))
                .collect();
            let (mean, se) = common::mean_se(&values);
            assert!(
                (mean - exact.mean()).abs() <= 3.0 * se.max(1e-12),
                "K={k} g={g}: mean {mean} vs {} (se {se})",
                exact.mean()
            );
            let mode = exact.mode();
            let p = exact.prob(mode);
            let p_hat = hits[mode] as f64 / reps as f64;
            let se_p = (p * (1.0 - p) / reps as f64).sqrt();
            assert!(
                (p_hat - p).abs() <= 3.0 * se_p.max(1e-12),
                "K={k} g={g}: P(K+={mode}) {p_hat} vs {p}"
            );
        }
    }
}

#[test]
fn dynamic_prior_on_filled_is_stochastically_smaller() {
    for prior in PriorOnK::study_priors() {
        for &c in &[0.01, 1.0, 10.0] {
            let st = induced_kplus_prior(&prior, &DirichletSchedule::Static { gamma: c }, 82);
            let dy = induced_kplus_prior(&prior, &DirichletSchedule::Dynamic { alpha: c }, 82);
            for j in 1..=82 {
                assert!(
                    dy.cdf(j) >= st.cdf(j) - 1e-12,
                    "{prior} c={c} j={j}: {} < {}",
                    dy.cdf(j),
                    st.cdf(j)
                );
            }
        }
    }
}

#[test]
fn induced_prior_examples() {
    let u = PriorOnK::uniform(1, 30).unwrap();
    let p = induced_kplus_prior(&u, &DirichletSchedule::Static { gamma: 10.0 }, 82);
    // The two laws agree closely up to K = 24; the gap above comes from the
    // chance that 82 draws leave some of 25-30 components empty.
    let tv: f64 = 0.5 * (1..=30).map(|k| (p.prob(k) - 1.0 / 30.0).abs()).sum::<f64>();
    assert!((tv - 0.0723130887).abs() < 1e-8, "{tv}");
    assert!((1..=24).all(|k| (p.prob(k) - 1.0 / 30.0).abs() < 0.01));
    for prior in PriorOnK::study_priors() {
        let d = induced_kplus_prior(&prior, &DirichletSchedule::Dynamic { alpha: 0.01 }, 82);
        assert!(d.cdf(3) > 0.9, "{prior}: {}", d.cdf(3));
    }
    let point = induced_kplus_prior(
        &PriorOnK::uniform(1, 1).unwrap(),
        &DirichletSchedule::Static { gamma: 1.0 },
        82,
    );
    assert_eq!(point.probs(), &[1.0]);
}

/// `P(K+ = j | K, n)` by inclusion-exclusion over the empty components, using
/// the aggregation property of the Dirichlet-multinomial.
fn inclusion_exclusion(k: usize, j: usize, n: usize, g: f64) -> f64 {
    let ln_binom = |a: usize, b: usize| ln_gamma(a as f64 + 1.0) - ln_gamma(b as f64 + 1.0) - ln_gamma((a - b) as f64 + 1.0);
    // Probability that a fixed set of m components holds all n draws.
    let ln_only = |m: usize, total: usize| {
        ln_gamma(total as f64 * g) - ln_gamma(total as f64 * g + n as f64) + ln_gamma(m as f64 * g + n as f64)
            - ln_gamma(m as f64 * g)
    };
    let all_filled: f64 = (0..j)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (ln_binom(j, i) + ln_only(j - i, j)).exp()
        })
        .sum();
    (ln_binom(k, j) + ln_only(j, k)).exp() * all_filled
}

#[test]
fn uniform_prior_matches_inclusion_exclusion() {
    let p = induced_kplus_prior(&PriorOnK::uniform(1, 30).unwrap(), &DirichletSchedule::Static { gamma: 10.0 }, 82);
    for j in 1..=30 {
        let want: f64 = (j..=30).map(|k| inclusion_exclusion(k, j, 82, 10.0) / 30.0).sum();
        assert!((p.prob(j) - want).abs() < 1e-8, "j={j}: {} vs {want}", p.prob(j));
    }
}
