//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// `P(K+ = j | K, n)` for `j = 1..=min(K, n)` by enumerating all `K^n`
/// label vectors. Each vector is weighted by its Polya-urn probability
/// `prod_i (g + m_{s_i}) / (K g + i - 1)`, which is the Dirichlet-multinomial
/// mass written without Gamma functions.
pub fn enumerate_kplus(k: usize, n: usize, g: f64) -> Vec<f64> {
    let mut probs = vec![0.0; k.min(n)];
    let mut labels = vec![0usize; n];
    let total = k.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % k;
            c /= k;
        }
        let mut counts = vec![0usize; k];
        let mut mass = 1.0;
        for (i, &l) in labels.iter().enumerate() {
            mass *= (g + counts[l] as f64) / (k as f64 * g + i as f64);
            counts[l] += 1;
        }
        let filled = counts.iter().filter(|&&c| c > 0).count();
        probs[filled - 1] += mass;
    }
    probs
}

/// Symmetric Dirichlet(g) weights as logarithms, via
/// `ln G(g) = ln G(g + 1) + ln(U) / g`.
pub fn log_dirichlet<R: Rng>(k: usize, g: f64, rng: &mut R) -> Vec<f64> {
    let big = Gamma::new(g + 1.0, 1.0).unwrap();
    let logs: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            big.sample(rng).ln() + u.ln() / g
        })
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z = m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logs.iter().map(|l| l - z).collect()
}

/// Number of distinct labels among `n` categorical draws with the given
/// log-weights.
pub fn filled_after_draws<R: Rng>(log_w: &[f64], n: usize, rng: &mut R) -> usize {
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut cum = Vec::with_capacity(log_w.len());
    let mut acc = 0.0;
    for l in log_w {
        acc += (l - m).exp();
        cum.push(acc);
    }
    let mut hit = vec![false; log_w.len()];
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let j = cum.partition_point(|&c| c <= u).min(log_w.len() - 1);
        hit[j] = true;
    }
    hit.iter().filter(|&&h| h).count()
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
