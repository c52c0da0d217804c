//! Besov norms `B^s_{p,r}`, Chemin-Lerner space-time norms and the embedding
//! comparisons between them.
//!
//! On the torus the zero mode sits inside the low block `Δ_{-1}`, so the
//! `q = -1` term also carries the mean of the field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{is_exponent, lr_norm, recip_exponent, Real};
use crate::spectral::{dyadic_block, Field, TorusGrid, VectorField};

const INDEX_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex<T> {
    pub s: T,
    pub p: T,
    pub r: T,
}

impl<T: Real> BesovIndex<T> {
    pub fn new(s: T, p: T, r: T) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::Contract(format!("regularity {s} is not finite")));
        }
        if !is_exponent(p) || !is_exponent(r) {
            return Err(Error::Contract(format!(
                "exponents must lie in [1, ∞], got p = {p}, r = {r}"
            )));
        }
        Ok(Self { s, p, r })
    }

    /// The `(σ, 2, 1)` index with `σ = 1 + d/2`.
    pub fn critical(dim: usize) -> Self {
        Self {
            s: critical_regularity(dim),
            p: T::of(2.0),
            r: T::one(),
        }
    }

    pub fn with_s(self, s: T) -> Self {
        Self { s, ..self }
    }
}

/// `σ = 1 + d/2`.
pub fn critical_regularity<T: Real>(dim: usize) -> T {
    T::one() + T::of_usize(dim) / T::of(2.0)
}

/// Weighted block sequence `2^{qs}‖Δ_q f‖_{L^p}`, `q = -1..=q_max`.
///
/// For `p = 2` the block norms come from Parseval without leaving spectral space.
pub fn besov_sequence<T: Real>(f: &Field<T>, idx: &BesovIndex<T>) -> Vec<T> {
    let grid = f.grid();
    (-1..=grid.q_max())
        .map(|q| {
            let norm = if idx.p == T::of(2.0) {
                let m = grid.block_multiplier(q).expect("block index within range");
                let sum: T = f
                    .spectrum()
                    .iter()
                    .zip(m)
                    .map(|(c, &w)| w * w * c.norm_sqr())
                    .sum();
                (sum * grid.volume()).sqrt()
            } else {
                dyadic_block(f, q)
                    .expect("block index within range")
                    .lp_norm(idx.p)
            };
            T::exp2i(q).powf(idx.s) * norm
        })
        .collect()
}

pub fn besov_norm<T: Real>(f: &Field<T>, idx: &BesovIndex<T>) -> T {
    lr_norm(besov_sequence(f, idx), idx.r)
}

/// Sum of the component norms.
pub fn besov_norm_vector<T: Real>(v: &VectorField<T>, idx: &BesovIndex<T>) -> T {
    v.components().iter().map(|c| besov_norm(c, idx)).sum()
}

/// `(L^d Σ_m (1+|k|²)^s |c_m|²)^{1/2}`.
pub fn sobolev_norm<T: Real>(f: &Field<T>, s: T) -> T {
    let grid = f.grid();
    let sum: T = f
        .spectrum()
        .iter()
        .zip(grid.radius())
        .map(|(c, &k)| (T::one() + k * k).powf(s) * c.norm_sqr())
        .sum();
    (sum * grid.volume()).sqrt()
}

/// Snapshots of a field at increasing instants.
#[derive(Clone, Debug)]
pub struct TimeSeriesField<T: Real> {
    times: Vec<T>,
    snapshots: Vec<Field<T>>,
}

impl<T: Real> TimeSeriesField<T> {
    pub fn new(times: Vec<T>, snapshots: Vec<Field<T>>) -> Result<Self> {
        if times.len() < 2 || times.len() != snapshots.len() {
            return Err(Error::Contract(format!(
                "need at least two instants with one snapshot each, got {} times and {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times.iter().all(|t| t.is_finite()) {
            return Err(Error::Contract(
                "times must be finite and strictly increasing".into(),
            ));
        }
        let grid = snapshots[0].grid();
        for s in &snapshots[1..] {
            grid.ensure_same(s.grid())?;
        }
        Ok(Self { times, snapshots })
    }

    /// `u(t) = f` at every instant.
    pub fn constant(f: &Field<T>, times: Vec<T>) -> Result<Self> {
        let snaps = vec![f.clone(); times.len()];
        Self::new(times, snaps)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn snapshots(&self) -> &[Field<T>] {
        &self.snapshots
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        self.snapshots[0].grid()
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("nonempty") - self.times[0]
    }

    /// Applies `f` to every snapshot.
    pub fn map(&self, f: impl Fn(&Field<T>) -> Field<T>) -> Self {
        Self {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(f).collect(),
        }
    }

    /// Pointwise combination of two series on the same instants.
    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&Field<T>, &Field<T>) -> Result<Field<T>>,
    ) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::Contract(
                "series sampled at different instants".into(),
            ));
        }
        let snapshots = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| f(a, b))
            .collect::<Result<_>>()?;
        Ok(Self {
            times: self.times.clone(),
            snapshots,
        })
    }

    /// Every `stride`-th instant, always keeping the last one.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        let last = self.times.len() - 1;
        let mut keep: Vec<usize> = (0..=last).step_by(stride).collect();
        if *keep.last().expect("nonempty") != last {
            keep.push(last);
        }
        Self::new(
            keep.iter().map(|&i| self.times[i]).collect(),
            keep.iter().map(|&i| self.snapshots[i].clone()).collect(),
        )
    }
}

/// `L^θ(0,T)` norm of sampled values: composite trapezoid, or max for `θ = ∞`.
pub fn time_norm<T: Real>(times: &[T], values: &[T], theta: T) -> T {
    debug_assert_eq!(times.len(), values.len());
    if theta.is_infinite() {
        return values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    }
    let half = T::of(0.5);
    let integral: T = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * half * (v[0].abs().powf(theta) + v[1].abs().powf(theta)))
        .sum();
    integral.powf(theta.recip())
}

fn check_theta<T: Real>(theta: T) -> Result<()> {
    if is_exponent(theta) {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "time exponent {theta} not in [1, ∞]"
        )))
    }
}

/// Per-block time norms `‖Δ_q u‖_{L^θ_T(L^p)}`, `q = -1..=q_max`.
pub fn block_time_norms<T: Real>(u: &TimeSeriesField<T>, p: T, theta: T) -> Vec<T> {
    let q_max = u.grid().q_max();
    (-1..=q_max)
        .map(|q| {
            let values: Vec<T> = u
                .snapshots
                .iter()
                .map(|f| dyadic_block(f, q).expect("in range").lp_norm(p))
                .collect();
            time_norm(&u.times, &values, theta)
        })
        .collect()
}

/// `‖u‖_{L̃^θ_T(B^s_{p,r})}`: time norm per block, then the weighted ℓ^r sum.
pub fn chemin_lerner_norm<T: Real>(
    u: &TimeSeriesField<T>,
    idx: &BesovIndex<T>,
    theta: T,
) -> Result<T> {
    check_theta(theta)?;
    let per_block = block_time_norms(u, idx.p, theta);
    Ok(lr_norm(
        per_block
            .iter()
            .enumerate()
            .map(|(i, &a)| T::exp2i(i as i32 - 1).powf(idx.s) * a),
        idx.r,
    ))
}

/// Sum of component Chemin-Lerner norms.
pub fn chemin_lerner_norm_vector<T: Real>(
    u: &[TimeSeriesField<T>],
    idx: &BesovIndex<T>,
    theta: T,
) -> Result<T> {
    u.iter().map(|c| chemin_lerner_norm(c, idx, theta)).sum()
}

/// `‖u‖_{L^θ_T(B^s_{p,r})}`: Besov norm per instant, then the time norm.
pub fn bochner_norm<T: Real>(u: &TimeSeriesField<T>, idx: &BesovIndex<T>, theta: T) -> Result<T> {
    check_theta(theta)?;
    let values: Vec<T> = u.snapshots.iter().map(|f| besov_norm(f, idx)).collect();
    Ok(time_norm(&u.times, &values, theta))
}

/// `‖u‖_{L^θ_T(L^p)}`.
pub fn lebesgue_time_norm<T: Real>(u: &TimeSeriesField<T>, p: T, theta: T) -> Result<T> {
    check_theta(theta)?;
    let values: Vec<T> = u.snapshots.iter().map(|f| f.lp_norm(p)).collect();
    Ok(time_norm(&u.times, &values, theta))
}

/// Right-hand side of an embedding comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormTarget<T> {
    Besov(BesovIndex<T>),
    /// A plain `L^p` norm; only `p = ∞` is admissible.
    Lebesgue(T),
}

impl<T: Real> NormTarget<T> {
    pub fn evaluate(&self, f: &Field<T>) -> T {
        match self {
            NormTarget::Besov(idx) => besov_norm(f, idx),
            NormTarget::Lebesgue(p) => f.lp_norm(*p),
        }
    }
}

/// Whether `B^{source}` embeds continuously into `target` in dimension `dim`.
pub fn embedding_admissible<T: Real>(
    source: &BesovIndex<T>,
    target: &NormTarget<T>,
    dim: usize,
) -> bool {
    let tol = T::of(INDEX_TOL);
    let d = T::of_usize(dim);
    match target {
        NormTarget::Besov(t) => {
            if t.p < source.p {
                return false;
            }
            let shifted = source.s - d * (recip_exponent(source.p) - recip_exponent(t.p));
            t.s < shifted - tol || ((t.s - shifted).abs() <= tol && source.r <= t.r)
        }
        NormTarget::Lebesgue(p) => {
            if !p.is_infinite() {
                return false;
            }
            let threshold = d * recip_exponent(source.p);
            source.s > threshold + tol
                || ((source.s - threshold).abs() <= tol && source.r == T::one())
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingRow<T> {
    pub source: BesovIndex<T>,
    pub target: NormTarget<T>,
    pub source_norm: T,
    pub target_norm: T,
    /// `‖f‖_target / ‖f‖_source`, zero when both vanish.
    pub ratio: T,
}

/// Evaluates every admissible pair on `f`; any inadmissible pair is a contract error.
pub fn check_embeddings<T: Real>(
    f: &Field<T>,
    pairs: &[(BesovIndex<T>, NormTarget<T>)],
) -> Result<Vec<EmbeddingRow<T>>> {
    let dim = f.grid().dim();
    pairs
        .iter()
        .map(|(source, target)| {
            if !embedding_admissible(source, target, dim) {
                return Err(Error::Contract(format!(
                    "{source:?} does not embed into {target:?} in dimension {dim}"
                )));
            }
            let source_norm = besov_norm(f, source);
            let target_norm = target.evaluate(f);
            let ratio = if source_norm > T::zero() {
                target_norm / source_norm
            } else {
                T::zero()
            };
            Ok(EmbeddingRow {
                source: *source,
                target: *target,
                source_norm,
                target_norm,
                ratio,
            })
        })
        .collect()
}

/// Largest embedding ratio of one pair over an ensemble.
pub fn embedding_constant<T: Real>(
    fields: &[Field<T>],
    source: &BesovIndex<T>,
    target: &NormTarget<T>,
) -> Result<T> {
    let mut worst = T::zero();
    for f in fields {
        let row = check_embeddings(f, &[(*source, *target)])?;
        worst = worst.max(row[0].ratio);
    }
    Ok(worst)
}

/// One CSV row of a norm report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormRow {
    pub norm_name: String,
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub theta: f64,
    pub value: f64,
}

impl NormRow {
    pub fn new<T: Real>(name: &str, idx: &BesovIndex<T>, theta: T, value: T) -> Self {
        Self {
            norm_name: name.to_string(),
            s: idx.s.as_f64(),
            p: idx.p.as_f64(),
            r: idx.r.as_f64(),
            theta: theta.as_f64(),
            value: value.as_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::GaussianEnsemble;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid<f64> {
        TorusGrid::new(2, 32, 2.0 * PI).unwrap()
    }

    #[test]
    fn index_validation() {
        assert!(BesovIndex::new(1.0, 0.5, 1.0).is_err());
        assert!(BesovIndex::new(1.0, 2.0, f64::INFINITY).is_ok());
        assert!(BesovIndex::new(f64::NAN, 2.0, 1.0).is_err());
        assert_eq!(BesovIndex::<f64>::critical(2).s, 2.0);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let f = Field::zeros(&grid());
        assert_eq!(besov_norm(&f, &BesovIndex::critical(2)), 0.0);
    }

    #[test]
    fn single_mode_closed_form() {
        let g = grid();
        let f = Field::from_fn(&g, |x| (2.0 * x[0]).cos());
        let c = g.cutoffs();
        for s in [-0.5, 0.0, 1.0, 2.0] {
            let idx = BesovIndex::new(s, 2.0, 1.0).unwrap();
            let expect = (c.phi(2.0) + 2f64.powf(s) * c.phi(1.0)) * f.l2_norm();
            assert!((besov_norm(&f, &idx) - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn homogeneity_and_triangle() {
        let g = grid();
        let e = GaussianEnsemble::default();
        let f = e.field(&g, 0).unwrap();
        let h = e.field(&g, 1).unwrap();
        let idx = BesovIndex::new(1.5, 2.0, 1.0).unwrap();
        let n = besov_norm(&f, &idx);
        assert!((besov_norm(&f.scale(3.5), &idx) - 3.5 * n).abs() < 1e-12 * n);
        assert!(besov_norm(&(&f + &h), &idx) <= n + besov_norm(&h, &idx) + 1e-12);
    }

    #[test]
    fn constant_series_matches_besov_norm() {
        let g = grid();
        let f = GaussianEnsemble::default().field(&g, 2).unwrap();
        let idx = BesovIndex::new(1.0, 2.0, 1.0).unwrap();
        let u = TimeSeriesField::constant(&f, vec![0.0, 0.5, 1.0]).unwrap();
        let cl = chemin_lerner_norm(&u, &idx, f64::INFINITY).unwrap();
        assert!((cl - besov_norm(&f, &idx)).abs() < 1e-12 * cl);
    }

    #[test]
    fn decaying_series_peaks_at_start() {
        let g = grid();
        let f = GaussianEnsemble::default().field(&g, 3).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let snaps = times.iter().map(|&t| f.scale((-t).exp())).collect();
        let u = TimeSeriesField::new(times, snaps).unwrap();
        let idx = BesovIndex::new(0.5, 2.0, 2.0).unwrap();
        let cl = chemin_lerner_norm(&u, &idx, f64::INFINITY).unwrap();
        assert!((cl - besov_norm(&f, &idx)).abs() < 1e-12 * cl);
    }

    #[test]
    fn series_validation() {
        let f = Field::zeros(&grid());
        assert!(TimeSeriesField::constant(&f, vec![0.0]).is_err());
        assert!(TimeSeriesField::new(vec![0.0, 0.0], vec![f.clone(), f.clone()]).is_err());
        let u = TimeSeriesField::constant(&f, vec![0.0, 1.0]).unwrap();
        assert!(chemin_lerner_norm(&u, &BesovIndex::critical(2), 0.5).is_err());
    }

    #[test]
    fn trapezoid_time_norm() {
        let t = [0.0, 0.5, 1.0];
        let v = [1.0, 1.0, 1.0];
        assert!((time_norm(&t, &v, 2.0_f64) - 1.0).abs() < 1e-15);
        assert_eq!(time_norm(&t, &[0.0, 3.0, 1.0], f64::INFINITY), 3.0);
    }

    #[test]
    fn admissibility_rules() {
        let src = BesovIndex::new(2.0, 2.0, 1.0).unwrap();
        let b = |s, p, r| NormTarget::Besov(BesovIndex::new(s, p, r).unwrap());
        assert!(embedding_admissible(&src, &b(2.0, 2.0, 2.0), 2));
        assert!(!embedding_admissible(
            &BesovIndex::new(2.0, 2.0, 2.0).unwrap(),
            &b(2.0, 2.0, 1.0),
            2
        ));
        assert!(embedding_admissible(&src, &b(1.0, 4.0, 1.0), 2));
        assert!(embedding_admissible(&src, &b(1.5, 4.0, 1.0), 2));
        assert!(!embedding_admissible(&src, &b(1.6, 4.0, 1.0), 2));
        assert!(!embedding_admissible(&src, &b(0.0, 1.0, 1.0), 2));
        assert!(embedding_admissible(
            &BesovIndex::new(1.0, 2.0, 1.0).unwrap(),
            &NormTarget::Lebesgue(f64::INFINITY),
            2
        ));
        assert!(!embedding_admissible(
            &BesovIndex::new(1.0, 2.0, 2.0).unwrap(),
            &NormTarget::Lebesgue(f64::INFINITY),
            2
        ));
        assert!(!embedding_admissible(&src, &NormTarget::Lebesgue(4.0), 2));
    }

    #[test]
    fn inadmissible_pair_is_contract_error() {
        let f = Field::zeros(&grid());
        let src = BesovIndex::new(1.0, 2.0, 2.0).unwrap();
        let bad = NormTarget::Besov(BesovIndex::new(1.0, 2.0, 1.0).unwrap());
        assert!(matches!(
            check_embeddings(&f, &[(src, bad)]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sobolev_cross_check_on_single_mode() {
        let g = grid();
        let f = Field::from_fn(&g, |x| (3.0 * x[0]).sin());
        let h = sobolev_norm(&f, 1.0);
        assert!((h - (10.0f64).sqrt() * f.l2_norm()).abs() < 1e-10);
    }
}
