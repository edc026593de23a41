//! Finite feature images and the kernel machinery on top of them.
//!
//! A [`FeatureSpace`] is the deduplicated, lexicographically ordered set of
//! feature vectors `Φ = [φ_1 … φ_N]`. States are addressed through their
//! index `n(φ(s))`, so a state-visitation expectation lives in `ℝ^N` and a
//! feature expectation in `ℝ^k`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mdp::Trajectory;

/// Minimum eigenvalue accepted by the PSD check.
pub const PSD_TOLERANCE: f64 = -1e-8;

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature image exceeds the cap of {cap} distinct vectors")]
    Capacity { cap: usize },
    #[error("feature vector {0:?} is not in the feature space")]
    UnknownFeature(Vec<f64>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("kernel is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    Indefinite { min_eigenvalue: f64 },
}

/// Feature map `φ: S -> ℝ^k`.
pub trait FeatureMap<S: ?Sized> {
    fn dim(&self) -> usize;
    fn features(&self, state: &S) -> Vec<f64>;
}

fn key_of(v: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 must share a key.
    v.iter().map(|x| if *x == 0.0 { 0 } else { x.to_bits() }).collect()
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone)]
pub struct FeatureSpace {
    vectors: Vec<Vec<f64>>,
    dim: usize,
    index: HashMap<Vec<u64>, usize>,
}

impl FeatureSpace {
    /// Deduplicates and sorts the vectors. Fails once more than `cap`
    /// distinct vectors have been seen.
    pub fn build<I>(vectors: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut seen: HashMap<Vec<u64>, Vec<f64>> = HashMap::new();
        let mut dim = None;
        for v in vectors {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(FeatureError::InvalidArgument(format!("non-finite feature vector {v:?}")));
            }
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(FeatureError::InvalidArgument(format!("feature vectors of length {d} and {}", v.len())))
                }
                _ => {}
            }
            seen.entry(key_of(&v)).or_insert(v);
            if seen.len() > cap {
                return Err(FeatureError::Capacity { cap });
            }
        }
        let dim = dim.ok_or_else(|| FeatureError::InvalidArgument("empty feature image".into()))?;
        let mut vectors: Vec<Vec<f64>> = seen.into_values().collect();
        vectors.sort_by(|a, b| lexicographic(a, b));
        let index = vectors.iter().enumerate().map(|(i, v)| (key_of(v), i)).collect();
        Ok(FeatureSpace { vectors, dim, index })
    }

    /// Feature image of a finite list of states.
    pub fn from_states<S, M: FeatureMap<S> + ?Sized>(states: &[S], map: &M, cap: usize) -> Result<Self> {
        FeatureSpace::build(states.iter().map(|s| map.features(s)), cap)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Feature dimension `k`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        &self.vectors[index]
    }

    pub fn index_of(&self, v: &[f64]) -> Option<usize> {
        self.index.get(&key_of(v)).copied()
    }

    pub fn require_index(&self, v: &[f64]) -> Result<usize> {
        self.index_of(v).ok_or_else(|| FeatureError::UnknownFeature(v.to_vec()))
    }

    /// `n(φ(s))` for a state.
    pub fn index_state<S: ?Sized, M: FeatureMap<S> + ?Sized>(&self, map: &M, state: &S) -> Result<usize> {
        self.require_index(&map.features(state))
    }

    /// `Φ` as a `k × N` matrix (one column per feature vector).
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.len(), |r, c| self.vectors[c][r])
    }

    /// Plain-text listing, one `index v_1 … v_k` line per vector.
    pub fn export_text(&self) -> String {
        let mut out = format!("# feature-space n={} k={}\n", self.len(), self.dim);
        for (i, v) in self.vectors.iter().enumerate() {
            write!(out, "{i}").unwrap();
            for x in v {
                write!(out, " {x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 of [`FeatureSpace::export_text`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.export_text().as_bytes()))
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut vectors = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let idx: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| FeatureError::InvalidArgument(format!("line {}: bad index", lineno + 1)))?;
            if idx != vectors.len() {
                return Err(FeatureError::InvalidArgument(format!("line {}: index {idx} out of order", lineno + 1)));
            }
            let v = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| FeatureError::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
            vectors.push(v);
        }
        let n = vectors.len();
        let space = FeatureSpace::build(vectors, usize::MAX)?;
        if space.len() != n {
            return Err(FeatureError::InvalidArgument("listing contains duplicates or is unordered".into()));
        }
        Ok(space)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectationForm {
    /// `ℝ^k`: discounted sum of feature vectors.
    Feature,
    /// `ℝ^N`: discounted sum of one-hot feature indicators.
    Visitation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExpectation {
    pub values: DVector<f64>,
    pub form: ExpectationForm,
    pub discount: f64,
    pub samples: usize,
}

/// Empirical expectation `(1/M) Σ_m Σ_t γ^{t-1} ê(X_t)` or its feature form.
pub fn estimate_mu<S, M>(
    trajectories: &[Trajectory<S>],
    discount: f64,
    form: ExpectationForm,
    space: &FeatureSpace,
    map: &M,
) -> Result<FeatureExpectation>
where
    M: FeatureMap<S> + ?Sized,
{
    if trajectories.is_empty() {
        return Err(FeatureError::InvalidArgument("no trajectories".into()));
    }
    let indices = trajectories
        .iter()
        .map(|t| t.states().map(|s| space.index_state(map, s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let visitation = visitation_from_indices(&indices, discount, space.len());
    let values = match form {
        ExpectationForm::Visitation => visitation,
        ExpectationForm::Feature => space.matrix() * visitation,
    };
    Ok(FeatureExpectation { values, form, discount, samples: trajectories.len() })
}

/// Visitation expectation from per-trajectory feature-index sequences.
pub fn visitation_from_indices(indices: &[Vec<usize>], discount: f64, n: usize) -> DVector<f64> {
    let mut mu = DVector::zeros(n);
    for seq in indices {
        let mut w = 1.0;
        for &i in seq {
            mu[i] += w;
            w *= discount;
        }
    }
    mu / indices.len().max(1) as f64
}

/// Folds a per-state occupancy vector into feature-index space.
pub fn visitation_from_occupancy(occupancy: &[f64], state_index: &[usize], n: usize) -> DVector<f64> {
    let mut mu = DVector::zeros(n);
    for (&o, &i) in occupancy.iter().zip(state_index) {
        mu[i] += o;
    }
    mu
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Dot,
    /// `exp(-‖a-b‖² / (2σ²))`.
    Gaussian {
        bandwidth: f64,
    },
    /// Gaussian on the game-feature embedding of [`game_embedding`].
    Game {
        bandwidth: f64,
    },
}

impl KernelKind {
    pub fn evaluate(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match *self {
            KernelKind::Dot => Ok(a.iter().zip(b).map(|(x, y)| x * y).sum()),
            KernelKind::Gaussian { bandwidth } => Ok(gaussian(squared_distance(a, b), bandwidth)),
            KernelKind::Game { bandwidth } => {
                let d = game_kernel_distance(a, b)?;
                Ok(gaussian(d * d, bandwidth))
            }
        }
    }
}

fn gaussian(sq_dist: f64, bandwidth: f64) -> f64 {
    (-sq_dist / (2.0 * bandwidth * bandwidth)).exp()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Dot => f.write_str("dot"),
            KernelKind::Gaussian { bandwidth } => write!(f, "gaussian:{bandwidth}"),
            KernelKind::Game { bandwidth } => write!(f, "game:{bandwidth}"),
        }
    }
}

impl FromStr for KernelKind {
    type Err = FeatureError;

    /// `dot`, `gaussian:<σ>` or `game:<σ>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || FeatureError::InvalidArgument(format!("unknown kernel `{s}`"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let bandwidth = |arg: Option<&str>| -> Result<f64> {
            let b: f64 = arg.ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if b > 0.0 && b.is_finite() {
                Ok(b)
            } else {
                Err(FeatureError::InvalidArgument(format!("bandwidth must be positive, got {b}")))
            }
        };
        match name {
            "dot" if arg.is_none() => Ok(KernelKind::Dot),
            "gaussian" => Ok(KernelKind::Gaussian { bandwidth: bandwidth(arg)? }),
            "game" => Ok(KernelKind::Game { bandwidth: bandwidth(arg)? }),
            _ => Err(bad()),
        }
    }
}

/// A kernel together with its Gram matrix over a feature space.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub kind: KernelKind,
    gram: DMatrix<f64>,
    min_eigenvalue: OnceLock<f64>,
}

impl Kernel {
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn size(&self) -> usize {
        self.gram.nrows()
    }

    /// Smallest eigenvalue of the Gram matrix, computed on first use.
    pub fn min_eigenvalue(&self) -> f64 {
        *self.min_eigenvalue.get_or_init(|| SymmetricEigen::new(self.gram.clone()).eigenvalues.min())
    }

    /// Wraps an explicit Gram matrix, checking symmetry and PSD.
    pub fn from_gram(kind: KernelKind, gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() || gram.nrows() == 0 {
            return Err(FeatureError::InvalidArgument("Gram matrix must be square and non-empty".into()));
        }
        let n = gram.nrows();
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (gram[(i, j)], gram[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(FeatureError::InvalidArgument(format!("Gram matrix asymmetric at ({i}, {j})")));
                }
            }
        }
        let kernel = Kernel { kind, gram, min_eigenvalue: OnceLock::new() };
        let min_eigenvalue = kernel.min_eigenvalue();
        if min_eigenvalue < PSD_TOLERANCE {
            return Err(FeatureError::Indefinite { min_eigenvalue });
        }
        Ok(kernel)
    }

    /// `xᵀ K y`.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(x.dot(&(&self.gram * y)))
    }

    /// `‖x‖_K = sqrt(max(0, xᵀ K x))`.
    pub fn norm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(x, x)?.max(0.0).sqrt())
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.size() {
            return Err(FeatureError::InvalidArgument(format!(
                "vector of length {} against a {}×{} kernel",
                x.len(),
                self.size(),
                self.size()
            )));
        }
        Ok(())
    }
}

/// Builds `K_ij = k(φ_i, φ_j)`.
///
/// Every built-in kind is an inner product of explicit feature maps, so the
/// result is PSD by construction and the eigenvalue check is deferred to
/// [`Kernel::min_eigenvalue`].
pub fn gram_matrix(kind: KernelKind, space: &FeatureSpace) -> Result<Kernel> {
    let n = space.len();
    if n == 0 {
        return Err(FeatureError::InvalidArgument("empty feature space".into()));
    }
    let points: Vec<Vec<f64>> = match kind {
        KernelKind::Game { .. } => space.vectors().iter().map(|v| game_embedding(v)).collect::<Result<_>>()?,
        _ => space.vectors().to_vec(),
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| match kind {
                    KernelKind::Dot => points[i].iter().zip(&points[j]).map(|(x, y)| x * y).sum(),
                    KernelKind::Gaussian { bandwidth } | KernelKind::Game { bandwidth } => {
                        gaussian(squared_distance(&points[i], &points[j]), bandwidth)
                    }
                })
                .collect()
        })
        .collect();
    let gram = DMatrix::from_fn(n, n, |i, j| if i <= j { rows[i][j] } else { rows[j][i] });
    Ok(Kernel { kind, gram, min_eigenvalue: OnceLock::new() })
}

/// `‖x‖_K`; dimension mismatch is an error.
pub fn k_norm(x: &DVector<f64>, kernel: &Kernel) -> Result<f64> {
    kernel.norm(x)
}

/// Bin counts of the touch coordinates of a game feature vector, in the
/// order `[T·Xp, T·Yp, T·Vm, T·Vd, T·Am]`.
pub const GAME_BINS: [usize; 5] = [3, 3, 8, 8, 6];
const GAME_CIRCULAR: [bool; 5] = [false, false, false, true, false];

fn arc_point(bin: usize, bins: usize, circular: bool) -> (f64, f64) {
    // Adjacent bins sit at chord length 1/bins.
    let step =
        if circular { 2.0 * std::f64::consts::PI / bins as f64 } else { std::f64::consts::PI / (bins - 1) as f64 };
    let radius = (1.0 / bins as f64) / (2.0 * (step / 2.0).sin());
    let angle = bin as f64 * step;
    (radius * angle.cos(), radius * angle.sin())
}

fn touch_radius_squared() -> f64 {
    GAME_BINS
        .iter()
        .zip(GAME_CIRCULAR)
        .map(|(&b, c)| {
            let (x, y) = arc_point(0, b, c);
            x * x + y * y
        })
        .sum()
}

/// Euclidean embedding of a game feature vector `[1-T, T·Xp, T·Yp, T·Vm,
/// T·Vd, T·Am]`.
///
/// Each linear feature with `B` bins is laid on a half-circle arc whose
/// neighbouring points are `1/B` apart; the heading bins go round a full
/// circle so that bins 0 and 7 are neighbours. Every touch vector then lies
/// on a common sphere about the origin, and the no-touch vector is lifted
/// off that sphere along an extra axis to distance exactly 1 from all of
/// them.
pub fn game_embedding(phi: &[f64]) -> Result<Vec<f64>> {
    let bins = game_bins(phi)?;
    let mut out = vec![0.0; 2 * GAME_BINS.len() + 1];
    match bins {
        None => out[2 * GAME_BINS.len()] = (1.0 - touch_radius_squared()).sqrt(),
        Some(b) => {
            for (i, (&bin, (&count, circular))) in b.iter().zip(GAME_BINS.iter().zip(GAME_CIRCULAR)).enumerate() {
                let (x, y) = arc_point(bin, count, circular);
                out[2 * i] = x;
                out[2 * i + 1] = y;
            }
        }
    }
    Ok(out)
}

/// Bins of a game feature vector, or `None` for the no-touch vector.
pub fn game_bins(phi: &[f64]) -> Result<Option<[usize; 5]>> {
    let invalid = || FeatureError::InvalidArgument(format!("not a game feature vector: {phi:?}"));
    if phi.len() != 6 {
        return Err(invalid());
    }
    if phi[0] == 1.0 {
        return if phi[1..].iter().all(|&x| x == 0.0) { Ok(None) } else { Err(invalid()) };
    }
    if phi[0] != 0.0 {
        return Err(invalid());
    }
    let mut bins = [0usize; 5];
    for (i, (&x, &count)) in phi[1..].iter().zip(&GAME_BINS).enumerate() {
        if x < 0.0 || x.fract() != 0.0 || x as usize >= count {
            return Err(invalid());
        }
        bins[i] = x as usize;
    }
    Ok(Some(bins))
}

/// Distance used inside the game kernel. The no-touch vector is at
/// distance 1 from every touch vector.
pub fn game_kernel_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(squared_distance(&game_embedding(a)?, &game_embedding(b)?).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Source;
    use approx::assert_abs_diff_eq;

    struct Identity;
    impl FeatureMap<Vec<f64>> for Identity {
        fn dim(&self) -> usize {
            2
        }
        fn features(&self, s: &Vec<f64>) -> Vec<f64> {
            s.clone()
        }
    }

    fn traj(states: Vec<Vec<f64>>) -> Trajectory<Vec<f64>> {
        Trajectory::new(states.into_iter().map(|s| (s, 0)).collect(), 1.0, 0, Source::Expert)
    }

    #[test]
    fn build_sorts_and_dedups() {
        let s = FeatureSpace::build(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![-0.0, 1.0]], 10).unwrap();
        assert_eq!(s.vectors(), &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(s.index_of(&[1.0, 0.0]), Some(1));
        assert_eq!(s.index_of(&[-0.0, 1.0]), Some(0));
    }

    #[test]
    fn constant_map_has_one_vector() {
        let s = FeatureSpace::build((0..50).map(|_| vec![3.0, 3.0]), 10).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        let err = FeatureSpace::build((0..5).map(|i| vec![i as f64]), 4).unwrap_err();
        assert!(matches!(err, FeatureError::Capacity { cap: 4 }));
    }

    #[test]
    fn export_roundtrip_and_hash_stability() {
        let s = FeatureSpace::build(vec![vec![0.5, 2.0], vec![0.1, 0.0]], 10).unwrap();
        let text = s.export_text();
        assert_eq!(text, "# feature-space n=2 k=2\n0 0.1 0\n1 0.5 2\n");
        let back = FeatureSpace::parse_text(&text).unwrap();
        assert_eq!(back.vectors(), s.vectors());
        assert_eq!(back.hash(), s.hash());
        assert_eq!(s.hash().len(), 64);
    }

    #[test]
    fn visitation_sums() {
        let space = FeatureSpace::build(vec![vec![0.0, 0.0], vec![1.0, 0.0]], 10).unwrap();
        let t = traj(vec![vec![0.0, 0.0]; 3]);
        let mu = estimate_mu(&[t.clone()], 1.0, ExpectationForm::Visitation, &space, &Identity).unwrap();
        assert_eq!(mu.values.as_slice(), &[3.0, 0.0]);
        let mu = estimate_mu(&[t], 0.9, ExpectationForm::Visitation, &space, &Identity).unwrap();
        assert_abs_diff_eq!(mu.values[0], 2.71, epsilon = 1e-15);

        let a = traj(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let b = traj(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let mu = estimate_mu(&[a, b], 0.5, ExpectationForm::Visitation, &space, &Identity).unwrap();
        // (1, 0.5) and (0.5, 1) averaged.
        assert_eq!(mu.values.as_slice(), &[0.75, 0.75]);
    }

    #[test]
    fn unknown_feature_is_named() {
        let space = FeatureSpace::build(vec![vec![0.0, 0.0]], 10).unwrap();
        let err =
            estimate_mu(&[traj(vec![vec![9.0, 9.0]])], 0.9, ExpectationForm::Feature, &space, &Identity).unwrap_err();
        assert!(err.to_string().contains("9.0"));
    }

    #[test]
    fn gaussian_convention() {
        let k = KernelKind::Gaussian { bandwidth: 0.6 };
        assert_abs_diff_eq!(k.evaluate(&[0.0, 0.0], &[0.6, 0.0]).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!((-0.5f64).exp(), 0.6065, epsilon = 1e-4);
        let space = FeatureSpace::build(vec![vec![0.0], vec![0.6], vec![2.0]], 10).unwrap();
        let kern = gram_matrix(k, &space).unwrap();
        for i in 0..3 {
            assert_eq!(kern.gram()[(i, i)], 1.0);
        }
    }

    #[test]
    fn dot_gram_is_phi_t_phi() {
        let space = FeatureSpace::build(vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, -1.0]], 10).unwrap();
        let kern = gram_matrix(KernelKind::Dot, &space).unwrap();
        let phi = space.matrix();
        assert_eq!(kern.gram(), &(phi.transpose() * phi));
    }

    #[test]
    fn indefinite_gram_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(Kernel::from_gram(KernelKind::Dot, m), Err(FeatureError::Indefinite { .. })));
    }

    #[test]
    fn k_norm_cases() {
        let id = Kernel::from_gram(KernelKind::Dot, DMatrix::identity(3, 3)).unwrap();
        let x = DVector::from_vec(vec![3.0, 4.0, 0.0]);
        assert_abs_diff_eq!(k_norm(&x, &id).unwrap(), 5.0, epsilon = 1e-15);
        assert_eq!(k_norm(&DVector::zeros(3), &id).unwrap(), 0.0);
        let v = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let rank1 = Kernel::from_gram(KernelKind::Dot, &v * v.transpose()).unwrap();
        assert_eq!(k_norm(&DVector::from_vec(vec![1.0, -1.0, 0.0]), &rank1).unwrap(), 0.0);
        assert!(k_norm(&DVector::zeros(2), &id).is_err());
    }

    #[test]
    fn kernel_kind_parsing() {
        assert_eq!("dot".parse::<KernelKind>().unwrap(), KernelKind::Dot);
        assert_eq!("gaussian:0.6".parse::<KernelKind>().unwrap(), KernelKind::Gaussian { bandwidth: 0.6 });
        assert_eq!("game:1".parse::<KernelKind>().unwrap(), KernelKind::Game { bandwidth: 1.0 });
        assert!("gaussian".parse::<KernelKind>().is_err());
        assert!("gaussian:-1".parse::<KernelKind>().is_err());
        assert!("rbf:1".parse::<KernelKind>().is_err());
    }

    const NO_TOUCH: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];

    fn touch(b: [usize; 5]) -> Vec<f64> {
        let mut v = vec![0.0];
        v.extend(b.iter().map(|&x| x as f64));
        v
    }

    #[test]
    fn game_distance_structure() {
        let a = touch([1, 2, 3, 4, 5]);
        assert_eq!(game_kernel_distance(&a, &a).unwrap(), 0.0);
        // Heading bins 0 and 7 are one step apart, as are 0 and 1.
        let d07 = game_kernel_distance(&touch([0, 0, 0, 0, 0]), &touch([0, 0, 0, 7, 0])).unwrap();
        let d01 = game_kernel_distance(&touch([0, 0, 0, 0, 0]), &touch([0, 0, 0, 1, 0])).unwrap();
        assert_abs_diff_eq!(d07, 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(d01, 0.125, epsilon = 1e-12);
        // Neighbouring bins of a linear feature are 1/B apart.
        let dx = game_kernel_distance(&touch([0, 0, 0, 0, 0]), &touch([1, 0, 0, 0, 0])).unwrap();
        assert_abs_diff_eq!(dx, 1.0 / 3.0, epsilon = 1e-12);
        assert!(game_kernel_distance(&[0.0; 5], &a).is_err());
        assert!(game_kernel_distance(&touch([3, 0, 0, 0, 0]), &a).is_err());
    }

    #[test]
    fn no_touch_is_equidistant() {
        let mut count = 0;
        for x in 0..3 {
            for y in 0..3 {
                for m in 0..8 {
                    for d in 0..8 {
                        for a in 0..6 {
                            let dist = game_kernel_distance(&NO_TOUCH, &touch([x, y, m, d, a])).unwrap();
                            assert_abs_diff_eq!(dist, 1.0, epsilon = 1e-12);
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(count, 3456);
    }
}
