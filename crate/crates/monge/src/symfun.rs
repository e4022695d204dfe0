//! Elementary symmetric polynomial calculus: σ_k, reduced polynomials
//! σ_j(λ|i), Gårding cone membership, Maclaurin ratios, and the quantitative
//! eigenvalue bounds used by the Hessian-type equations.
//!
//! σ_k is evaluated by the stable prefix recurrence that expands ∏(x + λᵢ);
//! brute-force subset enumeration and the Newton-identity route live in
//! [`reference`] and serve as independent oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalue tuple stored in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTuple {
    values: Vec<f64>,
}

impl EigenTuple {
    /// Sorts descending on construction.
    pub fn new(mut values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "empty eigenvalue tuple");
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        EigenTuple { values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry by 0-based index into the descending order λ₁ ≥ … ≥ λ_n.
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Tuple with entry `i` removed.
    pub fn without(&self, i: usize) -> EigenTuple {
        let mut v = self.values.clone();
        v.remove(i);
        EigenTuple::new(v)
    }
}

/// Binomial coefficient as f64 (exact for the small n used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// σ_k(λ) by the prefix-polynomial recurrence; σ₀ = 1.
pub fn sigma(k: usize, lam: &EigenTuple) -> Result<f64> {
    let n = lam.n();
    if k > n {
        return Err(Error::IndexOutOfRange {
            index: k as i64,
            lo: 0,
            hi: n as i64,
        });
    }
    Ok(sigma_all(k, lam.values())[k])
}

/// All of σ₀..σ_kmax in one sweep of the recurrence.
fn sigma_all(kmax: usize, values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for &lam in values {
        for j in (1..=kmax).rev() {
            e[j] += lam * e[j - 1];
        }
    }
    e
}

/// σ_j(λ|i): the j-th elementary symmetric function with λᵢ deleted
/// (equivalently, set to zero). `i` is 0-based.
pub fn sigma_reduced(j: usize, i: usize, lam: &EigenTuple) -> Result<f64> {
    let n = lam.n();
    if i >= n {
        return Err(Error::IndexOutOfRange {
            index: i as i64,
            lo: 0,
            hi: n as i64 - 1,
        });
    }
    if j > n - 1 {
        return Err(Error::IndexOutOfRange {
            index: j as i64,
            lo: 0,
            hi: n as i64 - 1,
        });
    }
    let mut rest: Vec<f64> = Vec::with_capacity(n - 1);
    for (idx, &v) in lam.values().iter().enumerate() {
        if idx != i {
            rest.push(v);
        }
    }
    Ok(sigma_all(j, &rest)[j])
}

/// Membership in the Gårding cone Γ_k: σ_j(λ) > 0 for j = 1..k.
pub fn in_gamma_cone(k: usize, lam: &EigenTuple) -> Result<bool> {
    let n = lam.n();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange {
            index: k as i64,
            lo: 1,
            hi: n as i64,
        });
    }
    let e = sigma_all(k, lam.values());
    Ok(e[1..=k].iter().all(|&s| s > 0.0))
}

/// Gradient of σ_k: component i equals σ_{k-1}(λ|i).
pub fn sigma_gradient(k: usize, lam: &EigenTuple) -> Result<Vec<f64>> {
    let n = lam.n();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange {
            index: k as i64,
            lo: 1,
            hi: n as i64,
        });
    }
    (0..n).map(|i| sigma_reduced(k - 1, i, lam)).collect()
}

/// Maclaurin ratio (σ_j(λ)/C(n,j))^{1/j}.
pub fn maclaurin_ratio(j: usize, lam: &EigenTuple) -> Result<f64> {
    let s = sigma(j, lam)?;
    Ok((s / binomial(lam.n(), j)).powf(1.0 / j as f64))
}

/// Outcome of checking the algebraic eigenvalue lemma on one tuple.
///
/// The hypotheses are σ_j(λ) > 0 for j ≤ k, σ_k(λ)^{1/k} ≥ A⁻¹ and
/// σ₁(λ) ≤ A. When they hold, `k0_empirical` is the tightest constant for
/// which all three conclusions hold on this tuple:
///   (1) σ_j(λ)^{1/j} ≥ K₀⁻¹ for j ≤ k,
///   (2) K₀⁻¹ ≤ σ_{j-1}(λ|i) ≤ K₀ for 2 ≤ j ≤ k and all i,
///   (3) |λ_j| ≤ K₀,
/// and `conclusion_margins` records the slack of each at that constant.
/// The intermediate chains are verified as well: `uno_margin` is the worst
/// slack in σ_{j-1}(λ|i) ≤ (n-j+1)·σ_{j-1}(λ), and `due_ratio_min` the
/// smallest observed ∏ᵢσ_{j-1}(λ|i) / σ_j(λ)^{n(j-1)/j} (the per-instance
/// constant of the product inequality, only its positivity is asserted —
/// the sharp constant is not reproduced here).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub hypotheses_hold: bool,
    pub a_used: f64,
    pub k0_empirical: f64,
    pub conclusion_margins: [f64; 3],
    pub uno_margin: f64,
    pub due_ratio_min: f64,
}

/// Evaluate the eigenvalue lemma on one tuple. Hypothesis failure is
/// reported in the record, not raised.
pub fn lemma_bounds(lam: &EigenTuple, k: usize, a: f64) -> Result<LemmaReport> {
    let n = lam.n();
    if k < 2 || k > n {
        return Err(Error::IndexOutOfRange {
            index: k as i64,
            lo: 2,
            hi: n as i64,
        });
    }
    assert!(a > 0.0, "lemma constant A must be positive");

    let failed = LemmaReport {
        hypotheses_hold: false,
        a_used: a,
        k0_empirical: 0.0,
        conclusion_margins: [0.0; 3],
        uno_margin: 0.0,
        due_ratio_min: 0.0,
    };

    let e = sigma_all(k, lam.values());
    if e[1..=k].iter().any(|&s| s <= 0.0) {
        return Ok(failed);
    }
    if e[k].powf(1.0 / k as f64) < 1.0 / a || e[1] > a {
        return Ok(failed);
    }

    // Tightest K₀ for conclusion (1).
    let mut min_root = f64::INFINITY;
    for j in 1..=k {
        min_root = min_root.min(e[j].powf(1.0 / j as f64));
    }
    let mut need = 1.0 / min_root;

    // Conclusion (2) together with the (uno) chain.
    let mut reduced_min = f64::INFINITY;
    let mut reduced_max: f64 = 0.0;
    let mut uno_margin = f64::INFINITY;
    let mut due_ratio_min = f64::INFINITY;
    for j in 2..=k {
        let mut prod = 1.0_f64;
        for i in 0..n {
            let s = sigma_reduced(j - 1, i, lam)?;
            if s <= 0.0 {
                // Impossible in the open cone; treat as a failed hypothesis.
                return Ok(failed);
            }
            reduced_min = reduced_min.min(s);
            reduced_max = reduced_max.max(s);
            uno_margin = uno_margin.min((n - j + 1) as f64 * e[j - 1] - s);
            prod *= s;
        }
        let denom = e[j].powf(n as f64 * (j - 1) as f64 / j as f64);
        due_ratio_min = due_ratio_min.min(prod / denom);
    }
    need = need.max(reduced_max).max(1.0 / reduced_min);

    // Conclusion (3).
    let mut abs_max: f64 = 0.0;
    for &l in lam.values() {
        abs_max = abs_max.max(l.abs());
    }
    need = need.max(abs_max);

    // Nudge up so all margins are nonnegative despite 1/(1/x) rounding.
    let k0 = need * (1.0 + 1e-12);

    let m1 = min_root - 1.0 / k0;
    let m2 = (k0 - reduced_max).min(reduced_min - 1.0 / k0);
    let m3 = k0 - abs_max;

    Ok(LemmaReport {
        hypotheses_hold: true,
        a_used: a,
        k0_empirical: k0,
        conclusion_margins: [m1, m2, m3],
        uno_margin,
        due_ratio_min,
    })
}

/// Brute-force reference implementations, kept independent of the
/// recurrence-based production path so they can serve as test oracles.
pub mod reference {
    use super::EigenTuple;

    /// σ_k by explicit subset enumeration. Returns the value and the sum of
    /// |term| over all subsets, the natural conditioning scale for
    /// comparisons.
    pub fn sigma_subsets(k: usize, lam: &EigenTuple) -> (f64, f64) {
        let n = lam.n();
        assert!(k <= n);
        if k == 0 {
            return (1.0, 1.0);
        }
        let mut sum = 0.0_f64;
        let mut abs_sum = 0.0_f64;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let term: f64 = idx.iter().map(|&i| lam.get(i)).product();
            sum += term;
            abs_sum += term.abs();
            // Next k-combination in lexicographic order.
            let mut pos = k;
            loop {
                if pos == 0 {
                    return (sum, abs_sum);
                }
                pos -= 1;
                if idx[pos] != pos + n - k {
                    break;
                }
                if pos == 0 {
                    return (sum, abs_sum);
                }
            }
            idx[pos] += 1;
            for p in (pos + 1)..k {
                idx[p] = idx[p - 1] + 1;
            }
        }
    }

    /// σ_k via the Newton identities k·e_k = Σ (-1)^{i-1} e_{k-i} p_i.
    pub fn sigma_newton(k: usize, lam: &EigenTuple) -> f64 {
        let n = lam.n();
        assert!(k <= n);
        let mut power_sums = vec![0.0_f64; k + 1];
        for i in 1..=k {
            power_sums[i] = lam.values().iter().map(|&l| l.powi(i as i32)).sum();
        }
        let mut e = vec![0.0_f64; k + 1];
        e[0] = 1.0;
        for m in 1..=k {
            let mut acc = 0.0_f64;
            for i in 1..=m {
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                acc += sign * e[m - i] * power_sums[i];
            }
            e[m] = acc / m as f64;
        }
        e[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{rng_for, uniform};
    use approx::assert_abs_diff_eq;

    fn tuple(v: &[f64]) -> EigenTuple {
        EigenTuple::new(v.to_vec())
    }

    #[test]
    fn sigma_all_ones() {
        let lam = tuple(&[1.0, 1.0, 1.0]);
        assert_eq!(sigma(0, &lam).unwrap(), 1.0);
        assert_eq!(sigma(2, &lam).unwrap(), 3.0);
    }

    #[test]
    fn sigma_321() {
        let lam = tuple(&[3.0, 2.0, 1.0]);
        assert_eq!(sigma(2, &lam).unwrap(), 11.0);
        assert_eq!(sigma(3, &lam).unwrap(), 6.0);
        let (oracle, _) = reference::sigma_subsets(2, &lam);
        assert_eq!(oracle, 11.0);
    }

    #[test]
    fn sigma_zero_annihilation() {
        let lam = tuple(&[2.5, 0.0, -1.5, 4.0]);
        let rest = tuple(&[2.5, -1.5, 4.0]);
        for k in 1..=3 {
            assert_abs_diff_eq!(
                sigma(k, &lam).unwrap(),
                sigma(k, &rest).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn sigma_rejects_out_of_range() {
        let lam = tuple(&[1.0, 2.0]);
        assert!(matches!(
            sigma(3, &lam),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn recurrence_matches_enumeration_and_newton() {
        let mut rng = rng_for(31, 0);
        for trial in 0..300 {
            let n = 2 + trial % 7; // up to n = 8
            let vals: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
            let lam = EigenTuple::new(vals);
            for k in 0..=n {
                let fast = sigma(k, &lam).unwrap();
                let (slow, scale) = reference::sigma_subsets(k, &lam);
                assert!(
                    (fast - slow).abs() <= 1e-12 * scale.max(1.0),
                    "n={n} k={k}: {fast} vs {slow}"
                );
                if k >= 1 {
                    let newton = reference::sigma_newton(k, &lam);
                    assert!(
                        (newton - slow).abs() <= 1e-12 * scale.max(1.0),
                        "newton n={n} k={k}: {newton} vs {slow}"
                    );
                }
            }
        }
    }

    #[test]
    fn reduced_example() {
        let lam = tuple(&[5.0, 1.0, -0.5]);
        // Delete the first (0-based index 0) entry: σ₁ of (1, -0.5) = 0.5.
        assert_abs_diff_eq!(sigma_reduced(1, 0, &lam).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn reduced_identities() {
        let mut rng = rng_for(32, 0);
        for trial in 0..500 {
            let n = 2 + trial % 6;
            let vals: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
            let lam = EigenTuple::new(vals);
            let s1 = sigma(1, &lam).unwrap();
            for i in 0..n {
                // λᵢ = σ₁(λ) - σ₁(λ|i).
                let li = s1 - sigma_reduced(1, i, &lam).unwrap();
                assert!((li - lam.get(i)).abs() <= 1e-12 * (1.0 + s1.abs()));
            }
            // Σᵢ σ_{j-1}(λ|i) = (n-j+1)·σ_{j-1}(λ).
            for j in 1..=n {
                let lhs: f64 = (0..n)
                    .map(|i| sigma_reduced(j - 1, i, &lam).unwrap())
                    .sum();
                let rhs = (n - j + 1) as f64 * sigma(j - 1, &lam).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs() + lhs.abs()),
                    "n={n} j={j}"
                );
            }
        }
    }

    #[test]
    fn cone_membership() {
        let ones = tuple(&[1.0; 5]);
        for k in 1..=5 {
            assert!(in_gamma_cone(k, &ones).unwrap());
        }
        let lam = tuple(&[5.0, 1.0, -0.5]);
        assert!(in_gamma_cone(2, &lam).unwrap()); // σ₁ = 5.5, σ₂ = 2
        assert!(!in_gamma_cone(3, &lam).unwrap()); // σ₃ = -2.5
        let neg = tuple(&[-1.0, 0.5]);
        for k in 1..=2 {
            assert!(!in_gamma_cone(k, &neg).unwrap());
        }
    }

    #[test]
    fn gradient_cases() {
        let mut rng = rng_for(33, 0);
        let lam = tuple(&[1.7, 0.4, -0.3, 2.2]);
        // k = 1: all ones.
        for gi in sigma_gradient(1, &lam).unwrap() {
            assert_eq!(gi, 1.0);
        }
        // k = n: product of the other entries.
        let grad = sigma_gradient(4, &lam).unwrap();
        for i in 0..4 {
            let prod: f64 = (0..4).filter(|&j| j != i).map(|j| lam.get(j)).product();
            assert_abs_diff_eq!(grad[i], prod, epsilon = 1e-13);
        }
        // Central finite differences.
        for trial in 0..50 {
            let n = 3 + trial % 4;
            let vals: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -1.5, 1.5)).collect();
            let k = 1 + trial % n;
            let step = 1e-6;
            let lam = EigenTuple::new(vals.clone());
            let grad = sigma_gradient(k, &lam).unwrap();
            // The tuple sorts its entries; differentiate against the sorted order.
            let sorted = lam.values().to_vec();
            for i in 0..n {
                let mut vp = sorted.clone();
                let mut vm = sorted.clone();
                vp[i] += step;
                vm[i] -= step;
                // Evaluate σ directly on the perturbed (possibly unsorted) tuples:
                // σ is symmetric so sorting does not change the value.
                let fp = sigma(k, &EigenTuple::new(vp)).unwrap();
                let fm = sigma(k, &EigenTuple::new(vm)).unwrap();
                let fd = (fp - fm) / (2.0 * step);
                assert!(
                    (fd - grad[i]).abs() <= 1e-7,
                    "n={n} k={k} i={i}: fd {fd} vs {}",
                    grad[i]
                );
            }
        }
    }

    fn sample_cone(rng: &mut rand_chacha::ChaCha8Rng, n: usize, k: usize) -> EigenTuple {
        loop {
            let vals: Vec<f64> = (0..n).map(|_| uniform(rng, -0.3, 1.5)).collect();
            let lam = EigenTuple::new(vals);
            if in_gamma_cone(k, &lam).unwrap() {
                return lam;
            }
        }
    }

    #[test]
    fn maclaurin_chain_nonincreasing() {
        let mut rng = rng_for(34, 0);
        for trial in 0..1000 {
            let n = 2 + trial % 7;
            let k = 1 + trial % n;
            let lam = sample_cone(&mut rng, n, k);
            let mut prev = f64::INFINITY;
            for j in 1..=k {
                let r = maclaurin_ratio(j, &lam).unwrap();
                assert!(
                    r <= prev * (1.0 + 1e-12),
                    "chain broken at j={j}: {r} > {prev}"
                );
                prev = r;
            }
        }
    }

    #[test]
    fn positivity_propagation() {
        let mut rng = rng_for(35, 0);
        for trial in 0..500 {
            let n = 3 + trial % 5;
            let k = 2 + trial % (n - 1);
            let lam = sample_cone(&mut rng, n, k);
            for j in 2..=k {
                for i in 0..n {
                    assert!(sigma_reduced(j - 1, i, &lam).unwrap() > 0.0);
                }
            }
        }
    }

    #[test]
    fn sigma_root_midpoint_concavity() {
        let mut rng = rng_for(36, 0);
        for trial in 0..1000 {
            let n = 2 + trial % 6;
            let k = 1 + trial % n;
            let a = sample_cone(&mut rng, n, k);
            let b = sample_cone(&mut rng, n, k);
            let mid = EigenTuple::new(
                a.values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect(),
            );
            // Midpoints of sorted tuples majorize pairings of unsorted ones,
            // and σ_k^{1/k} is concave and symmetric, so the sorted midpoint
            // inequality is the right test.
            let root = |t: &EigenTuple| sigma(k, t).unwrap().powf(1.0 / k as f64);
            assert!(root(&mid) >= 0.5 * root(&a) + 0.5 * root(&b) - 1e-12);
        }
    }

    #[test]
    fn lemma_example_mixed_sign() {
        let lam = tuple(&[5.0, 1.0, -0.5]);
        let rep = lemma_bounds(&lam, 2, 5.5).unwrap();
        assert!(rep.hypotheses_hold);
        for m in rep.conclusion_margins {
            assert!(m >= 0.0, "negative margin {m}");
        }
        for &l in lam.values() {
            assert!(l.abs() <= rep.k0_empirical);
        }
        assert!(rep.uno_margin >= 0.0);
        assert!(rep.due_ratio_min > 0.0);
    }

    #[test]
    fn lemma_symmetric_point() {
        let n = 3;
        let lam = tuple(&[1.0; 3]);
        let rep = lemma_bounds(&lam, n, n as f64).unwrap();
        assert!(rep.hypotheses_hold);
        assert!(rep.k0_empirical >= 1.0 && rep.k0_empirical <= n as f64);
        for &l in lam.values() {
            assert!(l.abs() <= rep.k0_empirical);
        }
    }

    #[test]
    fn lemma_hypothesis_violation() {
        let a = 4.0;
        for t in [2.0_f64, 8.0, 64.0] {
            let lam = tuple(&[t, 1.0 / t, 1.0]);
            let rep = lemma_bounds(&lam, 2, a).unwrap();
            let expect = lam.values().iter().sum::<f64>() <= a;
            assert_eq!(rep.hypotheses_hold, expect, "t = {t}");
        }
    }

    #[test]
    fn lemma_rejects_bad_k() {
        let lam = tuple(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            lemma_bounds(&lam, 1, 2.0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            lemma_bounds(&lam, 4, 2.0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
