//! Commutators `[f, Δ_q]𝒜g = f Δ_q(𝒜g) − Δ_q(f 𝒜g)`, their six-term
//! splitting and the fitted commutator estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{
    besov_norm, besov_norm_vector, block_time_norms, chemin_lerner_norm, chemin_lerner_norm_vector,
    critical_regularity, time_norm, BesovIndex, TimeSeriesField,
};
use crate::error::{Error, Result};
use crate::fit::{ratio, EstimateReport};
use crate::paraproduct::{paraproduct, remainder};
use crate::scalar::{is_exponent, lr_norm, recip_exponent, Real};
use crate::spectral::field::{from_padded, padded_from_spectrum, PaddedSum};
use crate::spectral::{dyadic_block, Field, TorusGrid, VectorField};

const HOLDER_TOL: f64 = 1e-12;

/// The operator `𝒜` inside the commutator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    Div,
    Grad,
}

fn padded_filtered<T: Real>(f: &Field<T>, multiplier: &[T]) -> Vec<T> {
    padded_from_spectrum(f.grid(), f.spectrum(), Some(multiplier))
}

/// Products `Σ_j a_j · b_j` on the padded grid, projected back.
fn padded_dot<T: Real>(grid: &TorusGrid<T>, a: &[Vec<T>], b: &[Vec<T>]) -> Field<T> {
    let mut acc = PaddedSum::new(grid);
    for (x, y) in a.iter().zip(b) {
        acc.add_product(x, y, T::one());
    }
    acc.finish()
}

/// `[f, Δ_q] div g` for every `q = -1..=q_max`.
pub fn commutator_div_all<T: Real>(f: &Field<T>, g: &VectorField<T>) -> Result<Vec<Field<T>>> {
    f.grid().ensure_same(g.grid())?;
    let div = g.divergence()?;
    let grid = f.grid();
    let fp = f.to_padded();
    let whole = f.product(&div)?;
    (-1..=grid.q_max())
        .map(|q| {
            let m = grid.block_multiplier(q)?;
            let mut acc = PaddedSum::new(grid);
            acc.add_product(&fp, &padded_filtered(&div, m), T::one());
            Ok(&acc.finish() - &whole.multiply_spectrum(m))
        })
        .collect()
}

/// `[v, Δ_q]·∇h = Σ_j (v^j Δ_q ∂_j h − Δ_q(v^j ∂_j h))` for every `q`.
pub fn commutator_dot_grad_all<T: Real>(v: &VectorField<T>, h: &Field<T>) -> Result<Vec<Field<T>>> {
    v.grid().ensure_same(h.grid())?;
    let grid = h.grid();
    if v.len() != grid.dim() {
        return Err(Error::Contract("transport field needs d components".into()));
    }
    let vp: Vec<Vec<T>> = v.components().iter().map(Field::to_padded).collect();
    let grad = h.gradient();
    let whole = v.dot(&grad)?;
    (-1..=grid.q_max())
        .map(|q| {
            let m = grid.block_multiplier(q)?;
            let gq: Vec<Vec<T>> = grad
                .components()
                .iter()
                .map(|c| padded_filtered(c, m))
                .collect();
            Ok(&padded_dot(grid, &vp, &gq) - &whole.multiply_spectrum(m))
        })
        .collect()
}

/// `[f, Δ_q] ∇h` for every `q`.
pub fn commutator_grad_all<T: Real>(f: &Field<T>, h: &Field<T>) -> Result<Vec<VectorField<T>>> {
    f.grid().ensure_same(h.grid())?;
    let grid = f.grid();
    let fp = f.to_padded();
    let grad = h.gradient();
    let grad_p: Vec<Vec<T>> = grad.components().iter().map(Field::to_padded).collect();
    (-1..=grid.q_max())
        .map(|q| {
            let m = grid.block_multiplier(q)?;
            let comps = grad
                .components()
                .iter()
                .zip(&grad_p)
                .map(|(c, cp)| {
                    let mut local = PaddedSum::new(grid);
                    local.add_product(&fp, &padded_filtered(c, m), T::one());
                    let whole = from_padded(grid, &mul(&fp, cp));
                    &local.finish() - &whole.multiply_spectrum(m)
                })
                .collect();
            VectorField::from_components(comps)
        })
        .collect()
}

fn mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

/// `[f, Δ_q]𝒜g`. For `Div`, `g` has `d` components and the result one; for
/// `Grad`, `g` has one component and the result `d`.
pub fn commutator<T: Real>(
    f: &Field<T>,
    g: &VectorField<T>,
    q: i32,
    op: Operator,
) -> Result<VectorField<T>> {
    f.grid().block_multiplier(q)?;
    let idx = (q + 1) as usize;
    match op {
        Operator::Div => {
            let mut all = commutator_div_all(f, g)?;
            VectorField::from_components(vec![all.swap_remove(idx)])
        }
        Operator::Grad => {
            if g.len() != 1 {
                return Err(Error::Contract(format!(
                    "gradient commutator needs a scalar, got {} components",
                    g.len()
                )));
            }
            let mut all = commutator_grad_all(f, g.component(0))?;
            Ok(all.swap_remove(idx))
        }
    }
}

/// The six pieces `F^1_q … F^6_q` of `[f, Δ_q] div g`.
#[derive(Clone, Debug)]
pub struct SixTermSplit<T: Real> {
    pub terms: [Field<T>; 6],
}

impl<T: Real> SixTermSplit<T> {
    pub fn sum(&self) -> Field<T> {
        let mut acc = self.terms[0].clone();
        for t in &self.terms[1..] {
            acc += t;
        }
        acc
    }
}

/// Splits `[f, Δ_q] div g` with `f = Δ_{-1}f + f̃` as in the paraproduct argument:
/// `F¹ = T_{f̃}Δ_q div g − Δ_q T_{f̃} div g`, `F² = T_{Δ_q div g} f̃`,
/// `F³ = −Δ_q T_{div g} f̃`, `F⁴ = Σ_j ∂_j R(f̃, Δ_q g^j) − ∂_j Δ_q R(f̃, g^j)`,
/// `F⁵ = Σ_j Δ_q R(∂_j f̃, g^j) − R(∂_j f̃, Δ_q g^j)`, `F⁶ = [Δ_{-1}f, Δ_q] div g`.
pub fn six_term_split<T: Real>(
    f: &Field<T>,
    g: &VectorField<T>,
    q: i32,
) -> Result<SixTermSplit<T>> {
    f.grid().ensure_same(g.grid())?;
    let grid = f.grid();
    let m = grid.block_multiplier(q)?;
    let low = dyadic_block(f, -1)?;
    let high = f - &low;
    let div = g.divergence()?;
    let div_q = div.multiply_spectrum(m);

    let f1 = &paraproduct(&high, &div_q)? - &paraproduct(&high, &div)?.multiply_spectrum(m);
    let f2 = paraproduct(&div_q, &high)?;
    let f3 = -&paraproduct(&div, &high)?.multiply_spectrum(m);
    let mut f4 = Field::zeros(grid);
    let mut f5 = Field::zeros(grid);
    for (j, gj) in g.components().iter().enumerate() {
        let gj_q = gj.multiply_spectrum(m);
        let whole = remainder(&high, gj)?;
        f4 += &remainder(&high, &gj_q)?.derivative(j);
        f4 -= &whole.multiply_spectrum(m).derivative(j);
        let dj = high.derivative(j);
        f5 += &remainder(&dj, gj)?.multiply_spectrum(m);
        f5 -= &remainder(&dj, &gj_q)?;
    }
    let f6 = commutator_div_all(&low, g)?.swap_remove((q + 1) as usize);
    Ok(SixTermSplit {
        terms: [f1, f2, f3, f4, f5, f6],
    })
}

/// L² gap between the six-term sum and the direct commutator at block `q`,
/// relative to the largest block `max_p ‖[f, Δ_p] div g‖`.
///
/// Blocks beyond the product's support hold only roundoff, so a per-block
/// ratio would compare noise with noise.
pub fn six_term_residual<T: Real>(f: &Field<T>, g: &VectorField<T>, q: i32) -> Result<T> {
    let all = commutator_div_all(f, g)?;
    let split = six_term_split(f, g, q)?;
    let scale = all
        .iter()
        .map(Field::l2_norm)
        .fold(T::min_positive_value(), T::max);
    Ok((&split.sum() - &all[(q + 1) as usize]).l2_norm() / scale)
}

/// Fitted commutator estimate for an ensemble.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CommutatorReport {
    /// Ratios `‖(LHS_q)‖_{ℓ^r} / RHS` per member and their maximum `C`.
    pub estimate: EstimateReport,
    /// Member attaining `C`.
    pub worst_member: usize,
    /// `LHS_q` of that member, `q = -1..=q_max`.
    pub lhs: Vec<f64>,
    pub rhs: f64,
    /// `c_q = LHS_q / (C·RHS)` of that member; its `ℓ^r` norm is one.
    pub c_q: Vec<f64>,
    /// Weighted `‖F^i_q‖` per `q` for that member, when the split applies.
    pub breakdown: Vec<[f64; 6]>,
}

impl CommutatorReport {
    pub fn constant(&self) -> f64 {
        self.estimate.constant
    }
}

struct MemberTerms {
    lhs: Vec<f64>,
    rhs: f64,
}

fn assemble(
    name: &str,
    members: Vec<MemberTerms>,
    r: f64,
    breakdown: impl FnOnce(usize) -> Result<Vec<[f64; 6]>>,
) -> Result<CommutatorReport> {
    let ratios: Vec<Option<f64>> = members
        .iter()
        .map(|m| ratio(lr_norm(m.lhs.iter().copied(), r), m.rhs))
        .collect();
    let estimate = EstimateReport::from_ratios(name, ratios.iter().flatten().copied());
    let worst = ratios
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|v| (i, v)))
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        });
    let Some((worst_member, _)) = worst else {
        return Ok(CommutatorReport {
            estimate,
            worst_member: 0,
            lhs: members.first().map(|m| m.lhs.clone()).unwrap_or_default(),
            rhs: 0.0,
            c_q: members
                .first()
                .map(|m| vec![0.0; m.lhs.len()])
                .unwrap_or_default(),
            breakdown: Vec::new(),
        });
    };
    let m = &members[worst_member];
    let c = estimate.constant;
    Ok(CommutatorReport {
        c_q: m.lhs.iter().map(|l| l / (c * m.rhs)).collect(),
        lhs: m.lhs.clone(),
        rhs: m.rhs,
        breakdown: breakdown(worst_member)?,
        worst_member,
        estimate,
    })
}

fn weighted_norms<T: Real>(blocks: &[Field<T>], s: T, p: T) -> Vec<f64> {
    blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (T::exp2i(i as i32 - 1).powf(s) * b.lp_norm(p)).as_f64())
        .collect()
}

fn breakdown_for<T: Real>(f: &Field<T>, g: &VectorField<T>, s: T, p: T) -> Result<Vec<[f64; 6]>> {
    (-1..=f.grid().q_max())
        .map(|q| {
            let split = six_term_split(f, g, q)?;
            let w = T::exp2i(q).powf(s);
            let mut row = [0.0; 6];
            for (slot, t) in row.iter_mut().zip(&split.terms) {
                *slot = (w * t.lp_norm(p)).as_f64();
            }
            Ok(row)
        })
        .collect()
}

/// Exponents of the general commutator estimate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct CommutatorExponents<T> {
    pub s: T,
    pub p: T,
    pub p1: T,
    pub p2: T,
    pub r: T,
}

impl<T: Real> CommutatorExponents<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > T::zero()) {
            return Err(Error::Contract(format!(
                "commutator estimate needs s > 0, got {}",
                self.s
            )));
        }
        if ![self.p, self.p1, self.p2, self.r]
            .iter()
            .all(|&x| is_exponent(x))
        {
            return Err(Error::Contract("exponents must lie in [1, ∞]".into()));
        }
        let gap = recip_exponent(self.p) - recip_exponent(self.p1) - recip_exponent(self.p2);
        if gap.abs() > T::of(HOLDER_TOL) {
            return Err(Error::Contract(format!(
                "need 1/p = 1/p1 + 1/p2, got p = {}, p1 = {}, p2 = {}",
                self.p, self.p1, self.p2
            )));
        }
        Ok(())
    }
}

/// `‖∇f‖_{L^{p1}} + ‖∇f‖_{B^{s-1}_{p2,r}} + ‖∇f‖_{B^0_{p1,r}}` and
/// `‖g‖_{B^s_{p2,r}} + ‖∇g‖_{L^{p1}}`, vector norms summed over components.
fn general_rhs<T: Real>(f: &Field<T>, g: &VectorField<T>, e: &CommutatorExponents<T>) -> T {
    let grad_f = f.gradient();
    let f_part = grad_f.lp_norm(e.p1)
        + besov_norm_vector(
            &grad_f,
            &BesovIndex {
                s: e.s - T::one(),
                p: e.p2,
                r: e.r,
            },
        )
        + besov_norm_vector(
            &grad_f,
            &BesovIndex {
                s: T::zero(),
                p: e.p1,
                r: e.r,
            },
        );
    let grad_g: T = g
        .components()
        .iter()
        .map(|c| c.gradient().lp_norm(e.p1))
        .sum();
    let g_part = besov_norm_vector(
        g,
        &BesovIndex {
            s: e.s,
            p: e.p2,
            r: e.r,
        },
    ) + grad_g;
    f_part * g_part
}

/// Fitted constant of the general estimate
/// `2^{qs}‖[f,Δ_q]div g‖_{L^p} ≤ C c_q ‖∇f‖_{L^{p1}∩B^{s-1}_{p2,r}∩B^0_{p1,r}}(‖g‖_{B^s_{p2,r}} + ‖∇g‖_{L^{p1}})`.
pub fn verify_general_commutator<T: Real>(
    members: &[(Field<T>, VectorField<T>)],
    e: &CommutatorExponents<T>,
    with_breakdown: bool,
) -> Result<CommutatorReport> {
    e.validate()?;
    let terms = members
        .par_iter()
        .map(|(f, g)| {
            let blocks = commutator_div_all(f, g)?;
            Ok(MemberTerms {
                lhs: weighted_norms(&blocks, e.s, e.p),
                rhs: general_rhs(f, g, e).as_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble("general_commutator", terms, e.r.as_f64(), |i| {
        if with_breakdown {
            let (f, g) = &members[i];
            breakdown_for(f, g, e.s, e.p)
        } else {
            Ok(Vec::new())
        }
    })
}

/// `2d/(d+2)`.
pub fn sobolev_conjugate<T: Real>(dim: usize) -> T {
    let d = T::of_usize(dim);
    T::of(2.0) * d / (d + T::of(2.0))
}

/// Which of the two critical commutators is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clause {
    /// `[ϱ, Δ_q] div v` against `‖∇ϱ‖_{B^{σ-1}_{2,1}}‖v‖_{B^σ_{2,1}}`.
    DensityDivergence,
    /// `[v, Δ_q]·∇ϱ` against `‖∇v‖_{B^{σ-1}_{2,1}}‖ϱ‖_{B^σ_{2,1}}`.
    VelocityTransport,
}

/// Fitted constants of the two critical commutator estimates at `σ = 1 + d/2`, `L^{2d/(d+2)}`.
pub fn verify_critical_commutator<T: Real>(
    members: &[(Field<T>, VectorField<T>)],
    clause: Clause,
    with_breakdown: bool,
) -> Result<CommutatorReport> {
    let Some((first, _)) = members.first() else {
        return assemble("critical_commutator", Vec::new(), 1.0, |_| Ok(Vec::new()));
    };
    let dim = first.grid().dim();
    let sigma: T = critical_regularity(dim);
    let p = sobolev_conjugate::<T>(dim);
    let low = BesovIndex {
        s: sigma - T::one(),
        p: T::of(2.0),
        r: T::one(),
    };
    let crit = BesovIndex::critical(dim);
    let terms = members
        .par_iter()
        .map(|(rho, v)| {
            let (blocks, rhs) = match clause {
                Clause::DensityDivergence => (
                    commutator_div_all(rho, v)?,
                    besov_norm_vector(&rho.gradient(), &low) * besov_norm_vector(v, &crit),
                ),
                Clause::VelocityTransport => (
                    commutator_dot_grad_all(v, rho)?,
                    velocity_gradient_norm(v, &low) * besov_norm(rho, &crit),
                ),
            };
            Ok(MemberTerms {
                lhs: weighted_norms(&blocks, sigma, p),
                rhs: rhs.as_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let name = match clause {
        Clause::DensityDivergence => "critical_commutator_div",
        Clause::VelocityTransport => "critical_commutator_transport",
    };
    assemble(name, terms, 1.0, |i| {
        if with_breakdown && clause == Clause::DensityDivergence {
            let (rho, v) = &members[i];
            breakdown_for(rho, v, sigma, p)
        } else {
            Ok(Vec::new())
        }
    })
}

/// `Σ_{i,j} ‖∂_j v^i‖_{B}`.
fn velocity_gradient_norm<T: Real>(v: &VectorField<T>, idx: &BesovIndex<T>) -> T {
    v.components()
        .iter()
        .map(|c| besov_norm_vector(&c.gradient(), idx))
        .sum()
}

/// A scalar series paired with a `d`-component vector series.
#[derive(Clone, Debug)]
pub struct SeriesPair<T: Real> {
    pub scalar: TimeSeriesField<T>,
    pub vector: Vec<TimeSeriesField<T>>,
}

impl<T: Real> SeriesPair<T> {
    pub fn new(scalar: TimeSeriesField<T>, vector: Vec<TimeSeriesField<T>>) -> Result<Self> {
        if vector.len() != scalar.grid().dim() {
            return Err(Error::Contract("vector series needs d components".into()));
        }
        for c in &vector {
            if c.times() != scalar.times() {
                return Err(Error::Contract(
                    "series sampled at different instants".into(),
                ));
            }
        }
        Ok(Self { scalar, vector })
    }

    pub fn times(&self) -> &[T] {
        self.scalar.times()
    }

    /// Vector snapshot at instant `i`.
    pub fn vector_at(&self, i: usize) -> VectorField<T> {
        VectorField::from_components(
            self.vector
                .iter()
                .map(|c| c.snapshots()[i].clone())
                .collect(),
        )
        .expect("components share a grid")
    }

    pub fn len(&self) -> usize {
        self.times().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Time exponents `(θ, θ1, θ2)` with `1/θ = 1/θ1 + 1/θ2`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct TimeSplit<T> {
    pub theta: T,
    pub theta1: T,
    pub theta2: T,
}

impl<T: Real> TimeSplit<T> {
    pub fn validate(&self) -> Result<()> {
        if ![self.theta, self.theta1, self.theta2]
            .iter()
            .all(|&t| is_exponent(t))
        {
            return Err(Error::Contract("time exponents must lie in [1, ∞]".into()));
        }
        let gap =
            recip_exponent(self.theta) - recip_exponent(self.theta1) - recip_exponent(self.theta2);
        if gap.abs() > T::of(HOLDER_TOL) {
            return Err(Error::Contract(format!(
                "need 1/θ = 1/θ1 + 1/θ2, got {} {} {}",
                self.theta, self.theta1, self.theta2
            )));
        }
        Ok(())
    }
}

/// Per-q `2^{qs}‖X_q‖_{L^θ_T(L^p)}` for a family of commutator blocks over time.
fn time_weighted<T: Real>(
    times: &[T],
    per_time: &[Vec<Field<T>>],
    s: T,
    p: T,
    theta: T,
) -> Vec<f64> {
    let nq = per_time[0].len();
    (0..nq)
        .map(|i| {
            let values: Vec<T> = per_time.iter().map(|blocks| blocks[i].lp_norm(p)).collect();
            (T::exp2i(i as i32 - 1).powf(s) * time_norm(times, &values, theta)).as_f64()
        })
        .collect()
}

/// Gradient of every component of a vector series, flattened.
fn gradient_series<T: Real>(u: &TimeSeriesField<T>) -> Vec<TimeSeriesField<T>> {
    (0..u.grid().dim())
        .map(|j| u.map(|f| f.derivative(j)))
        .collect()
}

/// Time-integrated critical commutator estimates.
pub fn verify_critical_commutator_time<T: Real>(
    members: &[SeriesPair<T>],
    split: &TimeSplit<T>,
    clause: Clause,
) -> Result<CommutatorReport> {
    split.validate()?;
    let Some(first) = members.first() else {
        return assemble("critical_commutator_time", Vec::new(), 1.0, |_| {
            Ok(Vec::new())
        });
    };
    let dim = first.scalar.grid().dim();
    let sigma: T = critical_regularity(dim);
    let p = sobolev_conjugate::<T>(dim);
    let low = BesovIndex {
        s: sigma - T::one(),
        p: T::of(2.0),
        r: T::one(),
    };
    let crit = BesovIndex::critical(dim);
    let terms = members
        .par_iter()
        .map(|m| {
            let per_time = (0..m.len())
                .map(|i| {
                    let rho = &m.scalar.snapshots()[i];
                    let v = m.vector_at(i);
                    match clause {
                        Clause::DensityDivergence => commutator_div_all(rho, &v),
                        Clause::VelocityTransport => commutator_dot_grad_all(&v, rho),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let rhs = match clause {
                Clause::DensityDivergence => {
                    chemin_lerner_norm_vector(&gradient_series(&m.scalar), &low, split.theta1)?
                        * chemin_lerner_norm_vector(&m.vector, &crit, split.theta2)?
                }
                Clause::VelocityTransport => {
                    let mut grad_v = 0.0;
                    for c in &m.vector {
                        grad_v +=
                            chemin_lerner_norm_vector(&gradient_series(c), &low, split.theta1)?
                                .as_f64();
                    }
                    T::of(grad_v) * chemin_lerner_norm(&m.scalar, &crit, split.theta2)?
                }
            };
            Ok(MemberTerms {
                lhs: time_weighted(m.times(), &per_time, sigma, p, split.theta),
                rhs: rhs.as_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let name = match clause {
        Clause::DensityDivergence => "critical_commutator_time_div",
        Clause::VelocityTransport => "critical_commutator_time_transport",
    };
    assemble(name, terms, 1.0, |_| Ok(Vec::new()))
}

/// Time-integrated commutator estimate at `s = 1 + d/p` with `r = 1`.
pub fn verify_time_commutator<T: Real>(
    members: &[SeriesPair<T>],
    p: T,
    split: &TimeSplit<T>,
    op: Operator,
) -> Result<CommutatorReport> {
    split.validate()?;
    if !is_exponent(p) {
        return Err(Error::Contract(format!(
            "Lebesgue exponent {p} not in [1, ∞]"
        )));
    }
    let Some(first) = members.first() else {
        return assemble("commutator_time", Vec::new(), 1.0, |_| Ok(Vec::new()));
    };
    let dim = first.scalar.grid().dim();
    let s = T::one() + T::of_usize(dim) * recip_exponent(p);
    let idx = BesovIndex { s, p, r: T::one() };
    let terms = members
        .par_iter()
        .map(|m| {
            let lhs = match op {
                Operator::Div => {
                    let per_time = (0..m.len())
                        .map(|i| commutator_div_all(&m.scalar.snapshots()[i], &m.vector_at(i)))
                        .collect::<Result<Vec<_>>>()?;
                    time_weighted(m.times(), &per_time, s, p, split.theta)
                }
                // Scalar g: the first vector component plays its role.
                Operator::Grad => grad_time_weighted(m, s, p, split.theta)?,
            };
            let g_norm = match op {
                Operator::Div => chemin_lerner_norm_vector(&m.vector, &idx, split.theta2)?,
                Operator::Grad => chemin_lerner_norm(&m.vector[0], &idx, split.theta2)?,
            };
            let rhs = chemin_lerner_norm(&m.scalar, &idx, split.theta1)? * g_norm;
            Ok(MemberTerms {
                lhs,
                rhs: rhs.as_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let name = match op {
        Operator::Div => "commutator_time_div",
        Operator::Grad => "commutator_time_grad",
    };
    assemble(name, terms, 1.0, |_| Ok(Vec::new()))
}

/// Gradient commutator LHS with vector norms summed over components.
fn grad_time_weighted<T: Real>(m: &SeriesPair<T>, s: T, p: T, theta: T) -> Result<Vec<f64>> {
    let per_time = (0..m.len())
        .map(|i| commutator_grad_all(&m.scalar.snapshots()[i], &m.vector[0].snapshots()[i]))
        .collect::<Result<Vec<_>>>()?;
    let nq = per_time[0].len();
    let dim = m.scalar.grid().dim();
    Ok((0..nq)
        .map(|i| {
            let mut total = T::zero();
            for j in 0..dim {
                let values: Vec<T> = per_time
                    .iter()
                    .map(|b| b[i].component(j).lp_norm(p))
                    .collect();
                total += time_norm(m.times(), &values, theta);
            }
            (T::exp2i(i as i32 - 1).powf(s) * total).as_f64()
        })
        .collect())
}

/// `‖Δ_q X‖` per block of a time series, a convenience for reports.
pub fn block_profile<T: Real>(u: &TimeSeriesField<T>, p: T, theta: T) -> Vec<f64> {
    block_time_norms(u, p, theta)
        .into_iter()
        .map(Real::as_f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::GaussianEnsemble;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid<f64> {
        TorusGrid::new(2, 32, 2.0 * PI).unwrap()
    }

    fn pair(index: usize) -> (Field<f64>, VectorField<f64>) {
        let g = grid();
        let e = GaussianEnsemble {
            band: 7,
            ..GaussianEnsemble::default()
        };
        (e.field(&g, index).unwrap(), e.vector(&g, index).unwrap())
    }

    #[test]
    fn constant_factor_commutes() {
        let (_, v) = pair(0);
        let c = Field::constant(v.grid(), 3.0);
        for b in commutator_div_all(&c, &v).unwrap() {
            assert!(b.sup_norm() < 1e-12);
        }
    }

    #[test]
    fn constant_vector_gives_zero() {
        let (f, _) = pair(1);
        let g = f.grid().clone();
        let v =
            VectorField::from_components(vec![Field::constant(&g, 1.0), Field::constant(&g, -2.0)])
                .unwrap();
        for b in commutator_div_all(&f, &v).unwrap() {
            assert!(b.sup_norm() < 1e-12);
        }
    }

    #[test]
    fn matches_definition() {
        let (f, v) = pair(2);
        let div = v.divergence().unwrap();
        for q in -1..=f.grid().q_max() {
            let direct = &f.product(&dyadic_block(&div, q).unwrap()).unwrap()
                - &dyadic_block(&f.product(&div).unwrap(), q).unwrap();
            let fast = commutator(&f, &v, q, Operator::Div).unwrap();
            assert!((&direct - fast.component(0)).l2_norm() <= 1e-12 * direct.l2_norm().max(1.0));
        }
    }

    #[test]
    fn six_terms_sum_to_commutator() {
        let (f, v) = pair(3);
        for q in -1..=f.grid().q_max() {
            assert!(six_term_residual(&f, &v, q).unwrap() < 1e-10);
        }
    }

    #[test]
    fn low_frequency_factor_lives_in_last_term() {
        // On a long box, modes with |k| ≤ 3/4 are nonzero yet fixed by Δ_{-1}.
        let g = TorusGrid::<f64>::new(2, 32, 16.0 * PI).unwrap();
        let f = Field::from_fn(&g, |x| (0.375 * x[0]).cos() + (0.25 * x[1]).sin());
        assert!((&dyadic_block(&f, -1).unwrap() - &f).sup_norm() < 1e-14);
        let v = GaussianEnsemble {
            band: 7,
            ..GaussianEnsemble::default()
        }
        .vector(&g, 4)
        .unwrap();
        let split = six_term_split(&f, &v, 1).unwrap();
        for t in &split.terms[..5] {
            assert!(t.sup_norm() < 1e-13);
        }
        let (f, v) = pair(4);
        let grid = f.grid().clone();
        let mask: Vec<f64> = grid
            .radius()
            .iter()
            .map(|&r| {
                if grid.cutoffs().chi(r) == 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let high = f.multiply_spectrum(&mask);
        let split = six_term_split(&high, &v, 2).unwrap();
        assert!(split.terms[5].sup_norm() < 1e-13);
    }

    #[test]
    fn exponent_and_holder_contracts() {
        let bad = CommutatorExponents {
            s: 1.0_f64,
            p: 2.0,
            p1: 2.0,
            p2: 2.0,
            r: 1.0,
        };
        assert!(bad.validate().is_err());
        let neg = CommutatorExponents {
            s: -1.0_f64,
            p: 1.0,
            p1: 2.0,
            p2: 2.0,
            r: 1.0,
        };
        assert!(neg.validate().is_err());
        let split = TimeSplit {
            theta: 1.0_f64,
            theta1: 2.0,
            theta2: 3.0,
        };
        assert!(split.validate().is_err());
    }

    #[test]
    fn constant_factor_gives_zero_report() {
        let (_, v) = pair(5);
        let c = Field::constant(v.grid(), 1.0);
        let e = CommutatorExponents {
            s: 1.0,
            p: 1.0,
            p1: 2.0,
            p2: 2.0,
            r: 1.0,
        };
        let rep = verify_general_commutator(&[(c, v)], &e, false).unwrap();
        assert!(rep.lhs.iter().all(|&x| x < 1e-10));
    }

    #[test]
    fn normalized_sequence_has_unit_l1_norm() {
        let members: Vec<_> = (0..3).map(pair).collect();
        let rep = verify_critical_commutator(&members, Clause::DensityDivergence, true).unwrap();
        let total: f64 = rep.c_q.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(rep.breakdown.len(), rep.lhs.len());
        let other = verify_critical_commutator(&members, Clause::VelocityTransport, false).unwrap();
        assert!(other.constant() > 0.0 && other.constant().is_finite());
    }
}
