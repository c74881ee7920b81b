//! Grouped design matrices and the transformations the solver relies on:
//! column standardization, expansion of overlapping groups into disjoint
//! blocks of replicated columns, and optional per-group orthogonalization.

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::loss::LossKind;
use crate::scalar::{rank_tolerance, Scalar};

/// A regression or classification problem whose predictors carry group
/// structure. Groups may overlap; every column must belong to at least one.
#[derive(Debug, Clone)]
pub struct GroupedProblem<F> {
    x: Array2<F>,
    y: Array1<F>,
    task: LossKind,
    groups: Vec<Vec<usize>>,
}

impl<F: Scalar> GroupedProblem<F> {
    pub fn new(
        x: Array2<F>,
        y: Array1<F>,
        task: LossKind,
        groups: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let (n, p) = x.dim();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows but response has {} entries",
                y.len()
            )));
        }
        if groups.is_empty() {
            return Err(Error::NoGroups);
        }
        let mut covered = vec![false; p];
        for (k, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::EmptyGroup(k));
            }
            let mut seen = vec![false; p];
            for &j in group {
                if j >= p {
                    return Err(Error::ColumnOutOfRange {
                        group: k,
                        column: j,
                        p,
                    });
                }
                if seen[j] {
                    return Err(Error::DuplicateColumn { group: k, column: j });
                }
                seen[j] = true;
                covered[j] = true;
            }
        }
        if let Some(j) = covered.iter().position(|&c| !c) {
            return Err(Error::UncoveredColumn(j));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response"));
        }
        if task == LossKind::Logistic {
            for (i, &yi) in y.iter().enumerate() {
                if yi != F::zero() && yi != F::one() {
                    return Err(Error::NonBinaryResponse(i));
                }
            }
        }
        Ok(Self { x, y, task, groups })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn x(&self) -> &Array2<F> {
        &self.x
    }

    pub fn y(&self) -> &Array1<F> {
        &self.y
    }

    pub fn task(&self) -> LossKind {
        self.task
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Center every column around zero and scale it to unit l2-norm; for
    /// square loss the response is centered too, which absorbs the intercept.
    ///
    /// Fails on constant columns, naming the offending index.
    pub fn standardize(&self) -> Result<(Self, Standardization<F>)> {
        let (n, p) = self.x.dim();
        if n < 2 {
            return Err(Error::DimensionMismatch(
                "standardization needs at least two rows".into(),
            ));
        }
        let n_f = F::cast(n as f64);
        let mut x = self.x.clone();
        let mut means = Array1::zeros(p);
        let mut scales = Array1::zeros(p);
        for j in 0..p {
            let mut col = x.column_mut(j);
            let mean = col.sum() / n_f;
            col.mapv_inplace(|v| v - mean);
            let norm = col.iter().map(|&v| v * v).sum::<F>().sqrt();
            let floor = F::epsilon() * n_f.sqrt() * (F::one() + mean.abs());
            if norm <= floor {
                return Err(Error::ConstantColumn(j));
            }
            col.mapv_inplace(|v| v / norm);
            means[j] = mean;
            scales[j] = norm;
        }
        let (y, y_mean) = match self.task {
            LossKind::Square => {
                let mean = self.y.sum() / n_f;
                (self.y.mapv(|v| v - mean), mean)
            }
            LossKind::Logistic => (self.y.clone(), F::zero()),
        };
        let problem = Self {
            x,
            y,
            task: self.task,
            groups: self.groups.clone(),
        };
        Ok((
            problem,
            Standardization {
                col_means: means,
                col_scales: scales,
                y_mean,
            },
        ))
    }

    /// Replicate shared columns so that each group owns a contiguous,
    /// disjoint block. Coefficients on the result are the latent per-group
    /// vectors; summing replicas recovers the original coefficients.
    pub fn expand(&self) -> ExpandedProblem<F> {
        let n = self.n();
        let p_tilde: usize = self.groups.iter().map(Vec::len).sum();
        // Column-major storage keeps per-group column slices contiguous.
        let mut xt = Array2::zeros((n, p_tilde).f());
        let mut back_map = Vec::with_capacity(p_tilde);
        let mut ranges = Vec::with_capacity(self.groups.len());
        let mut offset = 0;
        for group in &self.groups {
            for &j in group {
                xt.column_mut(back_map.len()).assign(&self.x.column(j));
                back_map.push(j);
            }
            ranges.push(offset..offset + group.len());
            offset += group.len();
        }
        ExpandedProblem {
            xt,
            y: self.y.clone(),
            task: self.task,
            group_ranges: ranges,
            back_map,
            p_original: self.p(),
        }
    }

    /// Full preparation pipeline: standardize, expand, and optionally
    /// orthogonalize each group block. The result carries everything needed
    /// to map solver output back to the raw data scale.
    pub fn prepare(&self, orthogonalize: bool) -> Result<Prepared<F>> {
        let (standardized, record) = self.standardize()?;
        let expanded = standardized.expand();
        if orthogonalize {
            let (disjoint, ortho) = expanded.orthogonalize()?;
            Ok(Prepared {
                standardization: record,
                expanded,
                ortho: Some(ortho),
                disjoint,
            })
        } else {
            let disjoint = expanded.to_disjoint()?;
            Ok(Prepared {
                standardization: record,
                expanded,
                ortho: None,
                disjoint,
            })
        }
    }
}

/// Centering and scaling applied to a problem, sufficient to translate
/// coefficients and intercept back to the raw data scale.
#[derive(Debug, Clone)]
pub struct Standardization<F> {
    pub col_means: Array1<F>,
    pub col_scales: Array1<F>,
    pub y_mean: F,
}

impl<F: Scalar> Standardization<F> {
    /// Raw-scale coefficients and intercept from standardized-basis
    /// collapsed coefficients and (standardized) intercept.
    pub fn coefficients_to_raw(&self, beta_std: &Array1<F>, intercept_std: F) -> (Array1<F>, F) {
        let beta_raw = Array1::from_iter(
            beta_std
                .iter()
                .zip(self.col_scales.iter())
                .map(|(&b, &s)| b / s),
        );
        let shift: F = beta_raw
            .iter()
            .zip(self.col_means.iter())
            .map(|(&b, &m)| b * m)
            .sum();
        (beta_raw, self.y_mean + intercept_std - shift)
    }

    /// Rescale latent (per replicated column) coefficients to the raw scale.
    pub fn latent_to_raw(&self, nu_std: &Array1<F>, back_map: &[usize]) -> Array1<F> {
        Array1::from_iter(
            nu_std
                .iter()
                .zip(back_map.iter())
                .map(|(&v, &j)| v / self.col_scales[j]),
        )
    }
}

/// Disjoint-group representation of a possibly overlapping problem: shared
/// columns are replicated once per group.
#[derive(Debug, Clone)]
pub struct ExpandedProblem<F> {
    xt: Array2<F>,
    y: Array1<F>,
    task: LossKind,
    group_ranges: Vec<Range<usize>>,
    back_map: Vec<usize>,
    p_original: usize,
}

impl<F: Scalar> ExpandedProblem<F> {
    pub fn xt(&self) -> &Array2<F> {
        &self.xt
    }

    pub fn y(&self) -> &Array1<F> {
        &self.y
    }

    pub fn task(&self) -> LossKind {
        self.task
    }

    pub fn group_ranges(&self) -> &[Range<usize>] {
        &self.group_ranges
    }

    pub fn back_map(&self) -> &[usize] {
        &self.back_map
    }

    pub fn p_expanded(&self) -> usize {
        self.back_map.len()
    }

    pub fn p_original(&self) -> usize {
        self.p_original
    }

    /// Sum latent coefficients over replicas of each original column.
    pub fn collapse(&self, nu: &Array1<F>) -> Result<Array1<F>> {
        if nu.len() != self.back_map.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} latent coefficients, got {}",
                self.back_map.len(),
                nu.len()
            )));
        }
        let mut beta = Array1::zeros(self.p_original);
        for (col, &j) in self.back_map.iter().enumerate() {
            beta[j] = beta[j] + nu[col];
        }
        Ok(beta)
    }

    /// View the expanded data directly as a solver problem (identity
    /// transform). Groups are already disjoint contiguous ranges.
    pub fn to_disjoint(&self) -> Result<DisjointProblem<F>> {
        DisjointProblem::new(
            self.xt.clone(),
            self.y.clone(),
            self.task,
            self.group_ranges.clone(),
            self.group_ranges.iter().map(Range::len).collect(),
        )
    }

    /// Change basis within each group so the transformed block `Qk` has
    /// orthonormal columns (`QkᵀQk = I`). Rank-deficient blocks — replicated
    /// columns always produce them — keep only their numerical rank.
    pub fn orthogonalize(&self) -> Result<(DisjointProblem<F>, OrthoTransform<F>)> {
        let n = self.xt.nrows();
        let mut blocks: Vec<Array2<F>> = Vec::with_capacity(self.group_ranges.len());
        let mut forward = Vec::with_capacity(self.group_ranges.len());
        let mut pseudo_inverse = Vec::with_capacity(self.group_ranges.len());
        let mut out_ranges = Vec::with_capacity(self.group_ranges.len());
        let mut offset = 0;

        for (k, range) in self.group_ranges.iter().enumerate() {
            let xk = self.xt.slice(ndarray::s![.., range.clone()]);
            let pk = range.len();
            let gram = xk.t().dot(&xk);
            let eig = sym_eigen(gram.view());
            let w_max = eig.values[0];
            if !(w_max > F::zero()) {
                return Err(Error::ZeroGroupMatrix(k));
            }
            let keep = w_max * rank_tolerance::<F>();
            let rank = eig.values.iter().take_while(|&&w| w > keep).count();
            if rank == 0 {
                return Err(Error::ZeroGroupMatrix(k));
            }
            let mut fwd = Array2::zeros((pk, rank));
            let mut pinv = Array2::zeros((rank, pk));
            for r in 0..rank {
                let root = eig.values[r].sqrt();
                for i in 0..pk {
                    fwd[[i, r]] = eig.vectors[[i, r]] / root;
                    pinv[[r, i]] = eig.vectors[[i, r]] * root;
                }
            }
            blocks.push(xk.dot(&fwd));
            forward.push(fwd);
            pseudo_inverse.push(pinv);
            out_ranges.push(offset..offset + rank);
            offset += rank;
        }

        let mut q = Array2::zeros((n, offset).f());
        for (block, range) in blocks.iter().zip(out_ranges.iter()) {
            q.slice_mut(ndarray::s![.., range.clone()]).assign(block);
        }
        let disjoint = DisjointProblem::new(
            q,
            self.y.clone(),
            self.task,
            out_ranges.clone(),
            self.group_ranges.iter().map(Range::len).collect(),
        )?;
        let transform = OrthoTransform {
            input_ranges: self.group_ranges.clone(),
            output_ranges: out_ranges,
            forward,
            pseudo_inverse,
        };
        Ok((disjoint, transform))
    }
}

/// Per-group basis changes produced by [`ExpandedProblem::orthogonalize`],
/// with enough data to move coefficients in either direction.
#[derive(Debug, Clone)]
pub struct OrthoTransform<F> {
    input_ranges: Vec<Range<usize>>,
    output_ranges: Vec<Range<usize>>,
    /// `Rk` with `Qk = Xk·Rk`, one per group, shape `pk × rk`.
    forward: Vec<Array2<F>>,
    /// Left inverse of `Rk`, shape `rk × pk`.
    pseudo_inverse: Vec<Array2<F>>,
}

impl<F: Scalar> OrthoTransform<F> {
    pub fn output_ranges(&self) -> &[Range<usize>] {
        &self.output_ranges
    }

    /// Map coefficients on the orthonormal basis back to the expanded
    /// (replicated-column) basis: `νk = Rk·θk`.
    pub fn to_expanded(&self, theta: &Array1<F>) -> Array1<F> {
        let p = self.input_ranges.last().map_or(0, |r| r.end);
        let mut nu = Array1::zeros(p);
        for (k, fwd) in self.forward.iter().enumerate() {
            let th = theta.slice(ndarray::s![self.output_ranges[k].clone()]);
            let block = fwd.dot(&th);
            nu.slice_mut(ndarray::s![self.input_ranges[k].clone()])
                .assign(&block);
        }
        nu
    }

    /// Project expanded-basis coefficients onto the orthonormal basis.
    /// Exact whenever the fitted values `Xk·νk` are representable, which in
    /// particular covers everything the solver can produce.
    pub fn to_orthonormal(&self, nu: &Array1<F>) -> Array1<F> {
        let m = self.output_ranges.last().map_or(0, |r| r.end);
        let mut theta = Array1::zeros(m);
        for (k, pinv) in self.pseudo_inverse.iter().enumerate() {
            let block = pinv.dot(&nu.slice(ndarray::s![self.input_ranges[k].clone()]));
            theta
                .slice_mut(ndarray::s![self.output_ranges[k].clone()])
                .assign(&block);
        }
        theta
    }
}

/// The representation every solver in this crate runs on: disjoint contiguous
/// group blocks with cached per-group spectral norms.
#[derive(Debug, Clone)]
pub struct DisjointProblem<F> {
    x: Array2<F>,
    y: Array1<F>,
    task: LossKind,
    groups: Vec<Range<usize>>,
    /// Group sizes used for penalty scaling. These stay at the original
    /// group sizes even when orthogonalization dropped rank.
    penalty_sizes: Vec<usize>,
    /// Largest eigenvalue of each group Gram matrix.
    gram_max: Vec<F>,
}

impl<F: Scalar> DisjointProblem<F> {
    pub fn new(
        x: Array2<F>,
        y: Array1<F>,
        task: LossKind,
        groups: Vec<Range<usize>>,
        penalty_sizes: Vec<usize>,
    ) -> Result<Self> {
        let (n, p) = x.dim();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows but response has {} entries",
                y.len()
            )));
        }
        if groups.is_empty() {
            return Err(Error::NoGroups);
        }
        if penalty_sizes.len() != groups.len() {
            return Err(Error::DimensionMismatch(
                "one penalty size per group is required".into(),
            ));
        }
        let mut expected = 0;
        for (k, r) in groups.iter().enumerate() {
            if r.start != expected || r.end <= r.start {
                return Err(Error::DimensionMismatch(format!(
                    "group {k} must cover a nonempty contiguous range starting at {expected}"
                )));
            }
            expected = r.end;
        }
        if expected != p {
            return Err(Error::DimensionMismatch(format!(
                "groups cover {expected} columns but the design has {p}"
            )));
        }
        let mut gram_max = Vec::with_capacity(groups.len());
        for (k, r) in groups.iter().enumerate() {
            let xk = x.slice(ndarray::s![.., r.clone()]);
            let top = crate::linalg::gram_spectral_max(xk);
            if !(top > F::zero()) {
                return Err(Error::ZeroGroupMatrix(k));
            }
            gram_max.push(top);
        }
        Ok(Self {
            x,
            y,
            task,
            groups,
            penalty_sizes,
            gram_max,
        })
    }

    /// Build directly from a problem whose groups are already disjoint,
    /// contiguous, and in column order — the no-overlap fast path.
    pub fn from_contiguous(problem: &GroupedProblem<F>) -> Result<Self> {
        let mut ranges = Vec::with_capacity(problem.groups.len());
        let mut expected = 0;
        for (k, group) in problem.groups.iter().enumerate() {
            for (offset, &j) in group.iter().enumerate() {
                if j != expected + offset {
                    return Err(Error::DimensionMismatch(format!(
                        "group {k} is not a contiguous in-order block"
                    )));
                }
            }
            ranges.push(expected..expected + group.len());
            expected += group.len();
        }
        let sizes = ranges.iter().map(Range::len).collect();
        Self::new(
            problem.x.clone(),
            problem.y.clone(),
            problem.task,
            ranges,
            sizes,
        )
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn x(&self) -> &Array2<F> {
        &self.x
    }

    pub fn y(&self) -> &Array1<F> {
        &self.y
    }

    pub fn task(&self) -> LossKind {
        self.task
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> ArrayView2<'_, F> {
        self.x.slice(ndarray::s![.., self.groups[k].clone()])
    }

    pub fn penalty_sizes(&self) -> &[usize] {
        &self.penalty_sizes
    }

    /// Largest eigenvalue of `XkᵀXk`.
    pub fn gram_max(&self, k: usize) -> F {
        self.gram_max[k]
    }

    /// Group-wise gradient Lipschitz constant for the problem's loss.
    pub fn lipschitz(&self, k: usize) -> F {
        crate::loss::lipschitz_from_gram_max(self.task, self.gram_max[k])
    }

    /// Replace the response, keeping design and cached constants.
    pub fn with_response(&self, y: Array1<F>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} response entries, got {}",
                self.n(),
                y.len()
            )));
        }
        let mut out = self.clone();
        out.y = y;
        Ok(out)
    }
}

/// A fully prepared problem: the solver-facing representation plus every
/// record needed to express results on the original data scale.
#[derive(Debug, Clone)]
pub struct Prepared<F> {
    pub standardization: Standardization<F>,
    pub expanded: ExpandedProblem<F>,
    pub ortho: Option<OrthoTransform<F>>,
    pub disjoint: DisjointProblem<F>,
}

impl<F: Scalar> Prepared<F> {
    /// Latent coefficients on the standardized expanded basis.
    pub fn solver_to_latent_std(&self, beta_solver: &Array1<F>) -> Array1<F> {
        match &self.ortho {
            Some(t) => t.to_expanded(beta_solver),
            None => beta_solver.clone(),
        }
    }

    /// Latent coefficients rescaled to the raw data scale.
    pub fn solver_to_latent_raw(&self, beta_solver: &Array1<F>) -> Array1<F> {
        let nu_std = self.solver_to_latent_std(beta_solver);
        self.standardization
            .latent_to_raw(&nu_std, self.expanded.back_map())
    }

    /// Collapsed raw-scale coefficients plus intercept.
    pub fn solver_to_raw(&self, beta_solver: &Array1<F>, intercept_std: F) -> (Array1<F>, F) {
        let nu_std = self.solver_to_latent_std(beta_solver);
        let beta_std = self
            .expanded
            .collapse(&nu_std)
            .expect("latent coefficients match the expansion layout");
        self.standardization
            .coefficients_to_raw(&beta_std, intercept_std)
    }

    /// Indices of groups with a nonzero coefficient block.
    pub fn active_groups(&self, beta_solver: &Array1<F>) -> Vec<usize> {
        self.disjoint
            .groups()
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                beta_solver
                    .slice(ndarray::s![(*r).clone()])
                    .iter()
                    .any(|&v| v != F::zero())
            })
            .map(|(k, _)| k)
            .collect()
    }
}

/// Predictions on raw-scale inputs from raw-scale coefficients.
pub fn predict_raw<F: Scalar>(
    x: ArrayView2<'_, F>,
    beta: &Array1<F>,
    intercept: F,
    task: LossKind,
) -> Array1<F> {
    let mut eta = x.dot(beta);
    eta.mapv_inplace(|v| v + intercept);
    match task {
        LossKind::Square => eta,
        LossKind::Logistic => eta.mapv(crate::loss::sigmoid),
    }
}

#[allow(unused_imports)]
use ndarray::ShapeBuilder; // for `.f()` column-major construction

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn toy_problem() -> GroupedProblem<f64> {
        let x = arr2(&[[1.0, 4.0, 2.0], [2.0, 5.0, 7.0], [3.0, 9.0, 1.0]]);
        let y = arr1(&[1.0, -1.0, 0.5]);
        GroupedProblem::new(x, y, LossKind::Square, vec![vec![0, 1], vec![1, 2]]).unwrap()
    }

    #[test]
    fn validates_group_structure() {
        let x = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        let y = arr1(&[0.0, 1.0]);
        let err = GroupedProblem::new(x.clone(), y.clone(), LossKind::Square, vec![vec![0]])
            .unwrap_err();
        assert!(matches!(err, Error::UncoveredColumn(1)));

        let err = GroupedProblem::new(
            x.clone(),
            y.clone(),
            LossKind::Square,
            vec![vec![0, 0], vec![1]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateColumn { group: 0, column: 0 }));

        let err = GroupedProblem::new(
            x.clone(),
            arr1(&[0.5, 1.0]),
            LossKind::Logistic,
            vec![vec![0], vec![1]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonBinaryResponse(0)));
    }

    #[test]
    fn standardize_matches_hand_computation() {
        let x = arr2(&[[1.0], [2.0], [3.0]]);
        let y = arr1(&[0.0, 0.0, 0.0]);
        let problem = GroupedProblem::new(x, y, LossKind::Square, vec![vec![0]]).unwrap();
        let (std_problem, record) = problem.standardize().unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(std_problem.x()[[0, 0]], -s, epsilon = 1e-15);
        assert_abs_diff_eq!(std_problem.x()[[1, 0]], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(std_problem.x()[[2, 0]], s, epsilon = 1e-15);
        assert_abs_diff_eq!(record.col_means[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(record.col_scales[0], 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn standardize_is_idempotent() {
        let problem = toy_problem();
        let (once, _) = problem.standardize().unwrap();
        let (twice, record) = once.standardize().unwrap();
        for (a, b) in once.x().iter().zip(twice.x().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        for j in 0..once.p() {
            assert_abs_diff_eq!(record.col_means[j], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(record.col_scales[j], 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let x = arr2(&[[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]);
        let y = arr1(&[0.0, 0.0, 0.0]);
        let problem =
            GroupedProblem::new(x, y, LossKind::Square, vec![vec![0], vec![1]]).unwrap();
        let err = problem.standardize().unwrap_err();
        assert!(matches!(err, Error::ConstantColumn(0)));
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((40, 6), |_| rng.gen_range(-4.0..9.0f64));
        let y = Array1::from_shape_fn(40, |_| rng.gen_range(-1.0..1.0));
        let groups = (0..6).map(|j| vec![j]).collect();
        let problem = GroupedProblem::new(x, y, LossKind::Square, groups).unwrap();
        let (std_problem, _) = problem.standardize().unwrap();
        for j in 0..6 {
            let col = std_problem.x().column(j);
            let mean = col.sum() / 40.0;
            let norm = col.dot(&col).sqrt();
            assert!(mean.abs() < 1e-12, "column {j} mean {mean}");
            assert!((norm - 1.0).abs() < 1e-10, "column {j} norm {norm}");
        }
    }

    #[test]
    fn expansion_replicates_shared_columns() {
        let problem = toy_problem();
        let expanded = problem.expand();
        assert_eq!(expanded.p_expanded(), 4);
        assert_eq!(expanded.back_map(), &[0, 1, 1, 2]);
        assert_eq!(expanded.group_ranges(), &[0..2, 2..4]);
        for (col, &j) in expanded.back_map().iter().enumerate() {
            for i in 0..problem.n() {
                assert_eq!(expanded.xt()[[i, col]], problem.x()[[i, j]]);
            }
        }
    }

    #[test]
    fn expansion_is_identity_for_disjoint_groups() {
        let x = arr2(&[[1.0, 2.0], [3.0, 4.0], [0.0, 1.0]]);
        let y = arr1(&[1.0, 0.0, 1.0]);
        let problem =
            GroupedProblem::new(x.clone(), y, LossKind::Square, vec![vec![0], vec![1]]).unwrap();
        let expanded = problem.expand();
        assert_eq!(expanded.back_map(), &[0, 1]);
        assert_eq!(expanded.xt(), &x);
    }

    #[test]
    fn single_group_covering_everything_expands_to_itself() {
        let x = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        let y = arr1(&[1.0, 0.0]);
        let problem =
            GroupedProblem::new(x.clone(), y, LossKind::Square, vec![vec![0, 1]]).unwrap();
        let expanded = problem.expand();
        assert_eq!(expanded.xt(), &x);
    }

    #[test]
    fn collapse_sums_replicated_coefficients() {
        let problem = toy_problem();
        let expanded = problem.expand();
        let beta = expanded.collapse(&arr1(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(beta, arr1(&[1.0, 5.0, 4.0]));

        let zero = expanded.collapse(&Array1::zeros(4)).unwrap();
        assert_eq!(zero, Array1::zeros(3));

        let err = expanded.collapse(&Array1::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn collapse_after_expand_is_identity_for_disjoint_groups() {
        let x = arr2(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let y = arr1(&[1.0, 0.0]);
        let problem =
            GroupedProblem::new(x, y, LossKind::Square, vec![vec![0, 1], vec![2]]).unwrap();
        let expanded = problem.expand();
        let nu = arr1(&[0.5, -1.0, 2.0]);
        assert_eq!(expanded.collapse(&nu).unwrap(), nu);
    }

    #[test]
    fn replication_consistency_holds_exactly_on_dyadic_data() {
        // Dyadic entries make every float operation exact, so the identity
        // Xt·ν = X·collapse(ν) can be asserted with equality.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = Array2::from_shape_fn((7, 4), |_| rng.gen_range(-8i32..8) as f64 / 4.0);
            let y = Array1::zeros(7);
            let problem = GroupedProblem::new(
                x,
                y,
                LossKind::Square,
                vec![vec![0, 1, 2], vec![1, 2, 3], vec![3, 0]],
            )
            .unwrap();
            let expanded = problem.expand();
            let nu =
                Array1::from_shape_fn(expanded.p_expanded(), |_| {
                    rng.gen_range(-8i32..8) as f64 / 4.0
                });
            let via_expanded = expanded.xt().dot(&nu);
            let via_collapsed = problem.x().dot(&expanded.collapse(&nu).unwrap());
            assert_eq!(via_expanded, via_collapsed);
        }
    }

    #[test]
    fn orthogonalize_yields_orthonormal_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((50, 3), |_| rng.gen_range(-1.0..1.0f64));
        let y = Array1::zeros(50);
        let problem = GroupedProblem::new(x, y, LossKind::Square, vec![vec![0, 1, 2]]).unwrap();
        let expanded = problem.expand();
        let (disjoint, transform) = expanded.orthogonalize().unwrap();

        let q = disjoint.group(0);
        let qtq = q.t().dot(&q);
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(qtq[[r, c]], expect, epsilon = 1e-10);
            }
        }

        // Fitted values agree between bases for random coefficients.
        let theta = Array1::from_shape_fn(3, |_| rng.gen_range(-2.0..2.0));
        let nu = transform.to_expanded(&theta);
        let fit_q = q.dot(&theta);
        let fit_x = expanded.xt().dot(&nu);
        for i in 0..50 {
            assert_abs_diff_eq!(fit_q[i], fit_x[i], epsilon = 1e-10);
        }

        // And the projection inverts the basis change on representable points.
        let back = transform.to_orthonormal(&nu);
        for i in 0..3 {
            assert_abs_diff_eq!(back[i], theta[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn orthogonalize_keeps_already_orthonormal_blocks() {
        let x = arr2(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let y = arr1(&[0.0, 0.0, 0.0]);
        let problem = GroupedProblem::new(x.clone(), y, LossKind::Square, vec![vec![0, 1]]).unwrap();
        let (disjoint, _) = problem.expand().orthogonalize().unwrap();
        let q = disjoint.group(0);
        // Same span, orthonormal; columns may be permuted/reflected, so
        // compare projectors QQᵀ = XXᵀ.
        let qqt = q.dot(&q.t());
        let xxt = x.dot(&x.t());
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(qqt[[i, j]], xxt[[i, j]], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn orthogonalize_unit_singleton_is_identity() {
        let x = arr2(&[[0.6], [0.8]]);
        let y = arr1(&[0.0, 0.0]);
        let problem = GroupedProblem::new(x.clone(), y, LossKind::Square, vec![vec![0]]).unwrap();
        let (disjoint, transform) = problem.expand().orthogonalize().unwrap();
        assert_eq!(disjoint.p(), 1);
        let theta = arr1(&[1.0f64]);
        let nu = transform.to_expanded(&theta);
        assert_abs_diff_eq!(nu[0].abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(disjoint.x()[[0, 0]].abs(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn orthogonalize_drops_rank_of_replicated_columns() {
        // A group holding the same column twice has rank one.
        let x = arr2(&[[1.0, 2.0], [2.0, 1.0], [3.0, -1.0]]);
        let y = arr1(&[0.0, 0.0, 0.0]);
        let problem =
            GroupedProblem::new(x, y, LossKind::Square, vec![vec![0, 1], vec![0]]).unwrap();
        let expanded = problem.expand();
        // Group 0 spans two independent columns; group 1 is the singleton.
        let (disjoint, _) = expanded.orthogonalize().unwrap();
        assert_eq!(disjoint.groups()[0].len(), 2);
        assert_eq!(disjoint.groups()[1].len(), 1);
        assert_eq!(disjoint.penalty_sizes(), &[2, 1]);
    }

    #[test]
    fn orthogonalize_preserves_fitted_value_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((30, 4), |_| rng.gen_range(-1.0..1.0f64));
        let y = Array1::zeros(30);
        let problem =
            GroupedProblem::new(x, y, LossKind::Square, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let expanded = problem.expand();
        let (disjoint, _) = expanded.orthogonalize().unwrap();
        for k in 0..2 {
            let xk = expanded
                .xt()
                .slice(ndarray::s![.., expanded.group_ranges()[k].clone()]);
            let qk = disjoint.group(k);
            // Projection of each Xk column onto span(Qk) leaves no residual.
            for j in 0..xk.ncols() {
                let col = xk.column(j);
                let coeffs = qk.t().dot(&col);
                let proj = qk.dot(&coeffs);
                let mut resid = 0.0;
                for i in 0..30 {
                    resid += (col[i] - proj[i]).powi(2);
                }
                assert!(resid.sqrt() < 1e-8, "group {k} column {j} residual {resid}");
            }
        }
    }

    #[test]
    fn rejects_zero_group_matrix() {
        let x = arr2(&[[0.0, 1.0], [0.0, 2.0]]);
        let y = arr1(&[0.0, 0.0]);
        let problem =
            GroupedProblem::new(x, y, LossKind::Square, vec![vec![0], vec![1]]).unwrap();
        let err = problem.expand().orthogonalize().unwrap_err();
        assert!(matches!(err, Error::ZeroGroupMatrix(0)));
    }

    #[test]
    fn from_contiguous_requires_ordered_blocks() {
        let x = arr2(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let y = arr1(&[1.0, 0.0]);
        let ordered = GroupedProblem::new(
            x.clone(),
            y.clone(),
            LossKind::Square,
            vec![vec![0, 1], vec![2]],
        )
        .unwrap();
        assert!(DisjointProblem::from_contiguous(&ordered).is_ok());

        let scrambled =
            GroupedProblem::new(x, y, LossKind::Square, vec![vec![1, 0], vec![2]]).unwrap();
        assert!(DisjointProblem::from_contiguous(&scrambled).is_err());
    }

    #[test]
    fn raw_scale_round_trip_reproduces_fitted_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Array2::from_shape_fn((25, 4), |_| rng.gen_range(-3.0..5.0f64));
        let y = Array1::from_shape_fn(25, |_| rng.gen_range(-1.0..1.0));
        let problem = GroupedProblem::new(
            x.clone(),
            y.clone(),
            LossKind::Square,
            vec![vec![0, 1], vec![1, 2, 3]],
        )
        .unwrap();
        let prepared = problem.prepare(true).unwrap();
        let beta_solver =
            Array1::from_shape_fn(prepared.disjoint.p(), |_| rng.gen_range(-1.0..1.0));

        // Standardized-basis fitted values.
        let fitted_std = prepared.disjoint.x().dot(&beta_solver);
        // Raw-basis predictions must match after adding back the centering.
        let (beta_raw, intercept) = prepared.solver_to_raw(&beta_solver, 0.0);
        let fitted_raw = predict_raw(x.view(), &beta_raw, intercept, LossKind::Square);
        let y_mean = y.sum() / 25.0;
        for i in 0..25 {
            assert_abs_diff_eq!(fitted_raw[i], fitted_std[i] + y_mean, epsilon = 1e-9);
        }
    }
}
