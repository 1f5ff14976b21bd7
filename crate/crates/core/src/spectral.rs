//! Chi-square distance of a finite reversible chain as an exponential
//! mixture.
//!
//! With `π` stationary and `D = diag(π)`, reversibility makes
//! `S = D^{1/2} Q D^{-1/2}` symmetric. Writing `S = Σ_j λ_j v_j v_jᵀ`,
//!
//! ```text
//! χ²_x(t) = Σ_y (P_t(x,y) - π_y)² / π_y = Σ_{j >= 2} (v_j(x)² / π_x) e^{-2|λ_j| t}
//! ```
//!
//! An independent route computes `P_t(x, ·)` by uniformization and sums the
//! squares directly.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{ExpMixture, ExpTerm};

pub const MAX_STATES: usize = 2048;
const ROW_SUM_TOLERANCE: f64 = 1e-10;
const REVERSIBILITY_TOLERANCE: f64 = 1e-9;
/// Eigenvalues below this (relative to the largest rate) are the
/// stationary mode.
const ZERO_EIGENVALUE: f64 = 1e-12;
/// Weights below this fraction of `χ²(0)` are eigensolver noise.
const WEIGHT_NOISE: f64 = 1e-13;
/// Rates closer than this (relative) are one eigenvalue.
const RATE_MERGE: f64 = 1e-9;
const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
/// Bound on the discarded Poisson mass per pass.
const POISSON_TAIL: f64 = 1e-18;
/// Largest `Λ t` handled in one uniformization pass.
const MAX_UNIFORMIZATION_STEP: f64 = 50.0;

/// A validated irreducible rate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    q: DMatrix<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
struct ChainFile {
    states: usize,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
}

impl Generator {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if !(2..=MAX_STATES).contains(&n) {
            return Err(Error::InvalidGenerator(format!(
                "size {n} outside 2..={MAX_STATES}"
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidGenerator(format!("row {i} has the wrong length")));
        }
        let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        for i in 0..n {
            let mut scale: f64 = 0.0;
            let mut sum = 0.0;
            for j in 0..n {
                let v = q[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidGenerator(format!("Q[{i}][{j}] is not finite")));
                }
                if i != j && v < 0.0 {
                    return Err(Error::InvalidGenerator(format!("Q[{i}][{j}] = {v} < 0")));
                }
                scale = scale.max(v.abs());
                sum += v;
            }
            if sum.abs() > ROW_SUM_TOLERANCE * scale.max(1.0) {
                return Err(Error::InvalidGenerator(format!("row {i} sums to {sum}")));
            }
        }
        let g = Self { q };
        if !g.is_irreducible() {
            return Err(Error::NotIrreducible);
        }
        Ok(g)
    }

    pub fn size(&self) -> usize {
        self.q.nrows()
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    fn reaches_all(&self, forward: bool) -> bool {
        let n = self.size();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for (j, seen_j) in seen.iter_mut().enumerate() {
                let edge = if forward { self.q[(i, j)] } else { self.q[(j, i)] };
                if i != j && edge > 0.0 && !*seen_j {
                    *seen_j = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Strong connectivity of the support graph.
    pub fn is_irreducible(&self) -> bool {
        self.reaches_all(true) && self.reaches_all(false)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ChainFile = serde_json::from_str(s)?;
        if file.states != file.q.len() {
            return Err(Error::InvalidGenerator(format!(
                "\"states\" = {} but Q has {} rows",
                file.states,
                file.q.len()
            )));
        }
        Self::new(file.q)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let n = self.size();
        let file = ChainFile {
            states: n,
            q: (0..n).map(|i| (0..n).map(|j| self.q[(i, j)]).collect()).collect(),
        };
        serde_json::to_string_pretty(&file).expect("chain serializes")
    }

    /// Product chain on `{0,1}^d`, each coordinate flipping at `flip_rate`.
    pub fn hypercube(dimension: u32, flip_rate: f64) -> Result<Self> {
        let n = 1usize << dimension;
        let mut rows = vec![vec![0.0; n]; n];
        for (x, row) in rows.iter_mut().enumerate() {
            for bit in 0..dimension {
                row[x ^ (1 << bit)] = flip_rate;
            }
            row[x] = -flip_rate * f64::from(dimension);
        }
        Self::new(rows)
    }
}

/// Solves `π Q = 0`, `Σ π = 1` with the last balance equation replaced by
/// the normalization.
pub fn stationary_distribution(g: &Generator) -> Result<Vec<f64>> {
    let n = g.size();
    let mut a = g.q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(Error::NotIrreducible)?;
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::NotIrreducible);
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.iter().map(|p| p / total).collect())
}

/// Stationary law and symmetric eigendecomposition of a reversible chain.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub stationary: Vec<f64>,
    /// Eigenvalues of `S`, nonincreasing; the first is the stationary 0.
    pub eigenvalues: Vec<f64>,
    /// Columns are the matching orthonormal eigenvectors.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralData {
    pub fn new(g: &Generator) -> Result<Self> {
        let pi = stationary_distribution(g)?;
        check_reversible(g, &pi)?;
        let n = g.size();
        let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| {
            let a = sqrt_pi[i] * g.q[(i, j)] / sqrt_pi[j];
            let b = sqrt_pi[j] * g.q[(j, i)] / sqrt_pi[i];
            0.5 * (a + b)
        });
        let (values, vectors) = jacobi_eigen(s)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
        Ok(Self {
            stationary: pi,
            eigenvalues: order.iter().map(|&i| values[i]).collect(),
            eigenvectors: DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]),
        })
    }

    /// Weights `ψ_j(x)² = v_j(x)² / π_x` and rates `2|λ_j|` of the
    /// nonstationary modes.
    pub fn modes(&self, start: usize) -> Vec<(f64, f64)> {
        let scale = self
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let px = self.stationary[start];
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, lam)| lam.abs() >= ZERO_EIGENVALUE * scale)
            .map(|(j, lam)| {
                let v = self.eigenvectors[(start, j)];
                (v * v / px, 2.0 * lam.abs())
            })
            .collect()
    }
}

fn check_reversible(g: &Generator, pi: &[f64]) -> Result<()> {
    let n = g.size();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = pi[i] * g.q[(i, j)];
            let b = pi[j] * g.q[(j, i)];
            if (a - b).abs() > REVERSIBILITY_TOLERANCE * a.max(b) {
                return Err(Error::NotReversible { i, j });
            }
        }
    }
    Ok(())
}

/// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal
/// Frobenius norm falls below `1e-12` of the full norm.
///
/// Returns the eigenvalues (unsorted) and a matrix whose columns are the
/// eigenvectors.
pub fn jacobi_eigen(mut a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut v = DMatrix::identity(n, n);
    let total = a.norm().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= JACOBI_TOLERANCE * total {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = (t * t + 1.0).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NoConvergence)
}

/// Squared chi-square distance from `start` as an exponential mixture.
///
/// ```
/// use cutoff_lab::spectral::{chi_square_mixture, Generator};
/// let g = Generator::new(vec![vec![-2.0, 2.0], vec![1.0, -1.0]]).unwrap();
/// let m = chi_square_mixture(&g, 0).unwrap();
/// assert_eq!(m.len(), 1);
/// assert!((m.leading().coefficient() - 2.0).abs() < 1e-12);
/// assert!((m.leading().rho() - 6.0).abs() < 1e-12);
/// ```
pub fn chi_square_mixture(g: &Generator, start: usize) -> Result<ExpMixture> {
    if start >= g.size() {
        return Err(Error::InvalidState(start));
    }
    let data = SpectralData::new(g)?;
    mixture_from_modes(data.modes(start))
}

fn mixture_from_modes(mut modes: Vec<(f64, f64)>) -> Result<ExpMixture> {
    let total: f64 = modes.iter().map(|m| m.0).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateLeadingTerm);
    }
    modes.retain(|&(w, _)| w > WEIGHT_NOISE * total);
    modes.sort_by(|a, b| a.1.total_cmp(&b.1));
    // merge numerically equal rates, weighted mean rate
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(modes.len());
    for (w, rate) in modes {
        match merged.last_mut() {
            Some((mw, mr)) if (rate - *mr).abs() <= RATE_MERGE * rate => {
                *mr = (*mw * *mr + w * rate) / (*mw + w);
                *mw += w;
            }
            _ => merged.push((w, rate)),
        }
    }
    let terms = merged
        .into_iter()
        .map(|(w, rate)| ExpTerm::from_linear(w, rate))
        .collect::<Result<Vec<_>>>()?;
    ExpMixture::from_terms(terms).map_err(|e| match e {
        Error::EmptyMixture | Error::LeadingCoefficientZero => Error::DegenerateLeadingTerm,
        other => other,
    })
}

/// `P_t(start, ·)` by uniformization: Poisson(`Λ t`)-weighted powers of
/// `I + Q/Λ`, truncated once the remaining Poisson mass is provably below
/// `1e-18`.
pub fn transition_row(g: &Generator, start: usize, t: f64) -> Result<Vec<f64>> {
    if start >= g.size() {
        return Err(Error::InvalidState(start));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::EvaluationTimeNegative(t));
    }
    let n = g.size();
    let lambda = (0..n).map(|i| -g.q[(i, i)]).fold(0.0, f64::max);
    let kernel = DMatrix::identity(n, n) + &g.q / lambda;
    let kernel_t = kernel.transpose();

    let mut row = DVector::zeros(n);
    row[start] = 1.0;
    let total = lambda * t;
    let steps = (total / MAX_UNIFORMIZATION_STEP).ceil().max(1.0) as usize;
    let mu = total / steps as f64;
    for _ in 0..steps {
        row = uniformization_pass(&kernel_t, &row, mu);
    }
    Ok(row.iter().copied().collect())
}

fn uniformization_pass(kernel_t: &DMatrix<f64>, row: &DVector<f64>, mu: f64) -> DVector<f64> {
    let mut weight = (-mu).exp();
    let mut power = row.clone();
    let mut out = row * weight;
    let mut k = 0.0;
    loop {
        k += 1.0;
        power = kernel_t * &power;
        weight *= mu / k;
        out += &power * weight;
        // past the mode the remaining weights shrink at least geometrically
        let ratio = mu / (k + 1.0);
        if ratio < 1.0 && weight * ratio / (1.0 - ratio) < POISSON_TAIL {
            return out;
        }
    }
}

/// `χ²_start(t)` computed from the uniformized transition row.
pub fn matrix_exponential_oracle(g: &Generator, start: usize, t: f64) -> Result<f64> {
    let pi = stationary_distribution(g)?;
    let row = transition_row(g, start, t)?;
    Ok(row.iter().zip(&pi).map(|(p, q)| (p - q) * (p - q) / q).sum())
}

/// Random reversible generator: symmetric conductances `c_ij` on a graph
/// containing the path `0 - 1 - … - (n-1)`, divided by random positive
/// weights, so `Q_ij = c_ij / w_i` and `π ∝ w`. Panics unless
/// `2 <= n <= 2048`.
pub fn random_reversible<R: Rng>(rng: &mut R, n: usize) -> Generator {
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            // keep a path i -- i+1 so the chain is irreducible
            let c = if j == i + 1 || rng.gen_bool(0.5) {
                rng.gen_range(0.1..2.0)
            } else {
                0.0
            };
            rows[i][j] = c / weights[i];
            rows[j][i] = c / weights[j];
        }
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = -row.iter().sum::<f64>();
    }
    Generator::new(rows).expect("conductance chains are valid generators")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state(a: f64, b: f64) -> Generator {
        Generator::new(vec![vec![-a, a], vec![b, -b]]).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&two_state(1.0, 1.0)).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);

        let pi = stationary_distribution(&two_state(2.0, 1.0)).unwrap();
        assert!((pi[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((pi[1] - 2.0 / 3.0).abs() < 1e-15);

        let cycle = Generator::new(vec![
            vec![-2.0, 1.0, 1.0],
            vec![1.0, -2.0, 1.0],
            vec![1.0, 1.0, -2.0],
        ])
        .unwrap();
        for p in stationary_distribution(&cycle).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn generator_validation() {
        assert!(matches!(
            Generator::new(vec![vec![-1.0, 1.0], vec![1.0, -0.5]]),
            Err(Error::InvalidGenerator(_))
        ));
        assert!(matches!(
            Generator::new(vec![vec![1.0, -1.0], vec![1.0, -1.0]]),
            Err(Error::InvalidGenerator(_))
        ));
        assert_eq!(
            Generator::new(vec![vec![-1.0, 1.0], vec![0.0, 0.0]]),
            Err(Error::NotIrreducible)
        );
        assert!(Generator::new(vec![vec![0.0]]).is_err());
    }

    #[test]
    fn non_reversible_rejected() {
        // a biased 3-cycle has uniform π but no detailed balance
        let g = Generator::new(vec![
            vec![-2.0, 2.0, 0.0],
            vec![0.0, -2.0, 2.0],
            vec![2.0, 0.0, -2.0],
        ])
        .unwrap();
        assert!(matches!(
            chi_square_mixture(&g, 0),
            Err(Error::NotReversible { .. })
        ));
    }

    #[test]
    fn two_state_mixtures() {
        let m = chi_square_mixture(&two_state(1.0, 1.0), 0).unwrap();
        assert_eq!(m.len(), 1);
        assert!((m.leading().coefficient() - 1.0).abs() < 1e-13);
        assert!((m.leading().rho() - 4.0).abs() < 1e-13);
        let oracle = matrix_exponential_oracle(&two_state(1.0, 1.0), 0, 0.5).unwrap();
        assert!((oracle - (-2f64).exp()).abs() < 1e-12);
        assert!((oracle - 0.135_335).abs() < 1e-6);

        let g = two_state(2.0, 1.0);
        let m = chi_square_mixture(&g, 0).unwrap();
        assert!((m.leading().coefficient() - 2.0).abs() < 1e-12);
        assert!((m.leading().rho() - 6.0).abs() < 1e-12);
        for t in [0.0, 0.1, 0.4] {
            let o = matrix_exponential_oracle(&g, 0, t).unwrap();
            assert!((m.evaluate(t).exp() - o).abs() <= 1e-10 * o);
        }
    }

    #[test]
    fn chi_square_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=6 {
            let g = random_reversible(&mut rng, n);
            let pi = stationary_distribution(&g).unwrap();
            for (x, p) in pi.iter().enumerate() {
                let want = 1.0 / p - 1.0;
                let m = chi_square_mixture(&g, x).unwrap();
                assert!((m.evaluate(0.0).exp() - want).abs() < 1e-10 * want);
                let o = matrix_exponential_oracle(&g, x, 0.0).unwrap();
                assert!((o - want).abs() < 1e-12 * want);
            }
        }
    }

    #[test]
    fn hypercube_product_chain() {
        let g = Generator::hypercube(3, 0.5).unwrap();
        let m = chi_square_mixture(&g, 0).unwrap();
        let want = crate::families::hypercube_mixture(3, 2.0).unwrap();
        assert_eq!(m.len(), want.len());
        for (a, b) in m.terms().iter().zip(want.terms()) {
            assert!((a.rho() - b.rho()).abs() < 1e-10);
            assert!((a.coefficient() - b.coefficient()).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_agrees_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(2..=8);
            let g = random_reversible(&mut rng, n);
            let x = rng.gen_range(0..n);
            let m = chi_square_mixture(&g, x).unwrap();
            let step = 0.5 / m.leading().rho();
            let mut prev = f64::INFINITY;
            for k in 0..10 {
                let t = step * k as f64;
                let spectral = m.evaluate(t).exp();
                let oracle = matrix_exponential_oracle(&g, x, t).unwrap();
                assert!(
                    (spectral - oracle).abs() <= 1e-8 * oracle,
                    "t={t}: {spectral} vs {oracle}"
                );
                assert!(spectral <= prev);
                prev = spectral;
            }
        }
    }

    #[test]
    fn long_times_split_uniformization() {
        let g = two_state(1.0, 1.0);
        let o = matrix_exponential_oracle(&g, 0, 40.0).unwrap();
        // e^{-160} is below every rounding floor; the row is at equilibrium
        assert!(o < 1e-20);
        let row = transition_row(&g, 0, 40.0).unwrap();
        assert!((row[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 1.0]);
        let (vals, vecs) = jacobi_eigen(a.clone()).unwrap();
        for (j, lam) in vals.iter().enumerate() {
            let v = vecs.column(j);
            let resid = &a * v - v * *lam;
            assert!(resid.norm() < 1e-12);
        }
        let gram = vecs.transpose() * &vecs;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-13);
    }

    #[test]
    fn chain_json() {
        let g = Generator::from_json_str(r#"{"states": 2, "Q": [[-2, 2], [1, -1]]}"#).unwrap();
        assert_eq!(g.rate(0, 1), 2.0);
        let back = Generator::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back, g);
        assert!(Generator::from_json_str(r#"{"states": 3, "Q": [[-2, 2], [1, -1]]}"#).is_err());
    }

    #[test]
    fn bad_start_state() {
        assert_eq!(
            chi_square_mixture(&two_state(1.0, 1.0), 2),
            Err(Error::InvalidState(2))
        );
    }
}
