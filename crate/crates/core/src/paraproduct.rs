//! Bony decomposition `fg = T_f g + T_g f + R(f, g)` and the continuity
//! checks for the remainder, for products and for compositions.

use rayon::prelude::*;

use crate::besov::{
    besov_norm, chemin_lerner_norm, lebesgue_time_norm, BesovIndex, TimeSeriesField,
};
use crate::error::{Error, Result};
use crate::fit::{ratio, EstimateReport};
use crate::scalar::{is_exponent, recip_exponent, Real};
use crate::spectral::field::{padded_from_spectrum, PaddedSum};
use crate::spectral::{Field, TorusGrid};

const HOLDER_TOL: f64 = 1e-12;

/// Padded-grid values of every block `Δ_q f`, indexed by `q + 1`.
pub(crate) fn padded_blocks<T: Real>(f: &Field<T>) -> Vec<Vec<T>> {
    let grid = f.grid();
    (-1..=grid.q_max())
        .map(|q| {
            let m = grid.block_multiplier(q).expect("in range");
            padded_from_spectrum(grid, f.spectrum(), Some(m))
        })
        .collect()
}

/// Running sums `S_q f` on the padded grid, indexed by `q` (`S_0 = Δ_{-1}`).
pub(crate) fn padded_low_passes<T: Real>(blocks: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(blocks.len());
    let mut acc = vec![T::zero(); blocks[0].len()];
    for b in blocks {
        acc.iter_mut().zip(b).for_each(|(a, &x)| *a += x);
        out.push(acc.clone());
    }
    out
}

fn paraproduct_padded<T: Real>(grid: &TorusGrid<T>, low: &[Vec<T>], high: &[Vec<T>]) -> Field<T> {
    let mut acc = PaddedSum::new(grid);
    // T_f g = Σ_{q ≥ 1} S_{q-1} f Δ_q g; the q ≤ 0 terms vanish since S_{-1} = S_{-2} = 0.
    for q in 1..=grid.q_max() {
        acc.add_product(&low[(q - 1) as usize], &high[(q + 1) as usize], T::one());
    }
    acc.finish()
}

fn remainder_padded<T: Real>(grid: &TorusGrid<T>, fb: &[Vec<T>], gb: &[Vec<T>]) -> Field<T> {
    let mut acc = PaddedSum::new(grid);
    let n = fb.len();
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            acc.add_product(&fb[i], &gb[j], T::one());
        }
    }
    acc.finish()
}

/// `T_f g = Σ_q S_{q-1} f Δ_q g`.
pub fn paraproduct<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<Field<T>> {
    f.grid().ensure_same(g.grid())?;
    let low = padded_low_passes(&padded_blocks(f));
    Ok(paraproduct_padded(f.grid(), &low, &padded_blocks(g)))
}

/// `R(f, g) = Σ_q Δ_q f Δ̃_q g`.
pub fn remainder<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<Field<T>> {
    f.grid().ensure_same(g.grid())?;
    Ok(remainder_padded(
        f.grid(),
        &padded_blocks(f),
        &padded_blocks(g),
    ))
}

#[derive(Clone, Debug)]
pub struct BonySplit<T: Real> {
    /// `T_f g`.
    pub tfg: Field<T>,
    /// `T_g f`.
    pub tgf: Field<T>,
    pub remainder: Field<T>,
}

impl<T: Real> BonySplit<T> {
    pub fn sum(&self) -> Field<T> {
        &(&self.tfg + &self.tgf) + &self.remainder
    }
}

pub fn bony_decompose<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<BonySplit<T>> {
    f.grid().ensure_same(g.grid())?;
    let grid = f.grid();
    let fb = padded_blocks(f);
    let gb = padded_blocks(g);
    let fl = padded_low_passes(&fb);
    let gl = padded_low_passes(&gb);
    Ok(BonySplit {
        tfg: paraproduct_padded(grid, &fl, &gb),
        tgf: paraproduct_padded(grid, &gl, &fb),
        remainder: remainder_padded(grid, &fb, &gb),
    })
}

/// Relative L² distance between the Bony sum and the dealiased product.
pub fn bony_reconstruction_error<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<T> {
    let split = bony_decompose(f, g)?;
    let product = f.product(g)?;
    Ok(split.sum().relative_l2_error(&product))
}

/// Exponent data for the remainder continuity check.
#[derive(Clone, Copy, Debug)]
pub struct RemainderExponents<T> {
    pub first: BesovIndex<T>,
    pub second: BesovIndex<T>,
    /// Target Lebesgue and summation exponents `(p, r)`.
    pub p: T,
    pub r: T,
}

impl<T: Real> RemainderExponents<T> {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (&self.first, &self.second);
        if !(a.s + b.s > T::zero()) {
            return Err(Error::Contract(format!(
                "remainder estimate needs s1 + s2 > 0, got {}",
                a.s + b.s
            )));
        }
        if !is_exponent(self.p) || !is_exponent(self.r) {
            return Err(Error::Contract(
                "target exponents must lie in [1, ∞]".into(),
            ));
        }
        let tol = T::of(HOLDER_TOL);
        let inv = recip_exponent(a.p) + recip_exponent(b.p);
        if recip_exponent(self.p) > inv + tol || inv > T::one() + tol {
            return Err(Error::Contract(format!(
                "need 1/p ≤ 1/p1 + 1/p2 ≤ 1, got p = {}, p1 = {}, p2 = {}",
                self.p, a.p, b.p
            )));
        }
        if recip_exponent(self.r) > recip_exponent(a.r) + recip_exponent(b.r) + tol {
            return Err(Error::Contract("need 1/r ≤ 1/r1 + 1/r2".into()));
        }
        Ok(())
    }

    /// `B^{s1+s2+d(1/p−1/p1−1/p2)}_{p,r}`.
    pub fn target(&self, dim: usize) -> BesovIndex<T> {
        let shift = T::of_usize(dim)
            * (recip_exponent(self.p)
                - recip_exponent(self.first.p)
                - recip_exponent(self.second.p));
        BesovIndex {
            s: self.first.s + self.second.s + shift,
            p: self.p,
            r: self.r,
        }
    }
}

/// `‖R(f,g)‖_target / (‖f‖‖g‖)` over pairs; pairs with a zero factor are skipped.
pub fn remainder_estimate_check<T: Real>(
    pairs: &[(Field<T>, Field<T>)],
    exps: &RemainderExponents<T>,
) -> Result<EstimateReport> {
    exps.validate()?;
    let ratios = pairs
        .par_iter()
        .map(|(f, g)| {
            let target = exps.target(f.grid().dim());
            let lhs = besov_norm(&remainder(f, g)?, &target);
            let rhs = besov_norm(f, &exps.first) * besov_norm(g, &exps.second);
            Ok(ratio(lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport::from_ratios(
        "remainder",
        ratios.into_iter().flatten(),
    ))
}

/// Time exponents `(θ, θ1, θ2, θ3, θ4)` with `1/θ = 1/θ1 + 1/θ2 = 1/θ3 + 1/θ4`.
#[derive(Clone, Copy, Debug)]
pub struct HolderSplit<T> {
    pub theta: T,
    pub theta1: T,
    pub theta2: T,
    pub theta3: T,
    pub theta4: T,
}

impl<T: Real> HolderSplit<T> {
    /// The symmetric split `θ1 = θ3 = ∞`, `θ2 = θ4 = θ`.
    pub fn sup_times(theta: T) -> Self {
        Self {
            theta,
            theta1: T::infinity(),
            theta2: theta,
            theta3: T::infinity(),
            theta4: theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.theta,
            self.theta1,
            self.theta2,
            self.theta3,
            self.theta4,
        ];
        if !all.iter().all(|&t| is_exponent(t)) {
            return Err(Error::Contract("time exponents must lie in [1, ∞]".into()));
        }
        let tol = T::of(HOLDER_TOL);
        let inv = recip_exponent(self.theta);
        let a = recip_exponent(self.theta1) + recip_exponent(self.theta2);
        let b = recip_exponent(self.theta3) + recip_exponent(self.theta4);
        if (inv - a).abs() > tol || (inv - b).abs() > tol {
            return Err(Error::Contract(format!(
                "Hölder split violated: 1/θ = {inv}, 1/θ1 + 1/θ2 = {a}, 1/θ3 + 1/θ4 = {b}"
            )));
        }
        Ok(())
    }
}

/// Pointwise dealiased product of two series sampled at the same instants.
pub fn series_product<T: Real>(
    u: &TimeSeriesField<T>,
    v: &TimeSeriesField<T>,
) -> Result<TimeSeriesField<T>> {
    u.zip_with(v, |a, b| a.product(b))
}

/// LHS and RHS of the product estimate for one pair.
pub fn product_estimate_terms<T: Real>(
    u: &TimeSeriesField<T>,
    v: &TimeSeriesField<T>,
    idx: &BesovIndex<T>,
    split: &HolderSplit<T>,
) -> Result<(T, T)> {
    split.validate()?;
    if !(idx.s > T::zero()) {
        return Err(Error::Contract(format!(
            "product estimate needs s > 0, got {}",
            idx.s
        )));
    }
    let lhs = chemin_lerner_norm(&series_product(u, v)?, idx, split.theta)?;
    let inf = T::infinity();
    let rhs = lebesgue_time_norm(u, inf, split.theta1)? * chemin_lerner_norm(v, idx, split.theta2)?
        + lebesgue_time_norm(v, inf, split.theta3)? * chemin_lerner_norm(u, idx, split.theta4)?;
    Ok((lhs, rhs))
}

/// Fitted constant of the Chemin-Lerner product estimate over series pairs.
pub fn product_estimate_check<T: Real>(
    pairs: &[(TimeSeriesField<T>, TimeSeriesField<T>)],
    idx: &BesovIndex<T>,
    split: &HolderSplit<T>,
) -> Result<EstimateReport> {
    split.validate()?;
    let ratios = pairs
        .par_iter()
        .map(|(u, v)| product_estimate_terms(u, v, idx, split).map(|(l, r)| ratio(l, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport::from_ratios(
        "product",
        ratios.into_iter().flatten(),
    ))
}

/// LHS and RHS of the composition estimate for one series.
pub fn composition_estimate_terms<T: Real>(
    v: &TimeSeriesField<T>,
    f: &(dyn Fn(T) -> T + Sync),
    idx: &BesovIndex<T>,
    theta: T,
) -> Result<(T, T)> {
    let f0 = f(T::zero());
    if f0.abs() > T::of(1e-14) {
        return Err(Error::Contract(format!(
            "composition needs F(0) = 0, got {f0}"
        )));
    }
    if !(idx.s > T::zero()) {
        return Err(Error::Contract(format!(
            "composition estimate needs s > 0, got {}",
            idx.s
        )));
    }
    let image = v.map(|x| x.map_dealiased(f));
    let lhs = chemin_lerner_norm(&image, idx, theta)?;
    let sup = lebesgue_time_norm(v, T::infinity(), T::infinity())?;
    let power = idx.s.floor().to_i32().unwrap_or(0) + 1;
    let rhs = (T::one() + sup).powi(power) * chemin_lerner_norm(v, idx, theta)?;
    Ok((lhs, rhs))
}

pub fn composition_estimate_check<T: Real>(
    series: &[TimeSeriesField<T>],
    f: &(dyn Fn(T) -> T + Sync),
    idx: &BesovIndex<T>,
    theta: T,
) -> Result<EstimateReport> {
    let ratios = series
        .par_iter()
        .map(|v| composition_estimate_terms(v, f, idx, theta).map(|(l, r)| ratio(l, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport::from_ratios(
        "composition",
        ratios.into_iter().flatten(),
    ))
}

/// `v ↦ ψ(ρ̄ + v) − ψ(ρ̄)` with `ψ(ρ) = √(Aγ ρ^{γ−1})`, the sound speed shifted to vanish at 0.
pub fn sound_speed_perturbation<T: Real>(gamma: T, a: T, rho_bar: T) -> impl Fn(T) -> T + Sync {
    let psi = move |rho: T| (a * gamma * rho.powf(gamma - T::one())).sqrt();
    let base = psi(rho_bar);
    move |v: T| psi(rho_bar + v) - base
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::GaussianEnsemble;
    use crate::spectral::dyadic_block;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid<f64> {
        TorusGrid::new(2, 32, 2.0 * PI).unwrap()
    }

    #[test]
    fn constant_factor_recovers_scaled_product() {
        let g = grid();
        let h = GaussianEnsemble::default().field(&g, 0).unwrap();
        let c = Field::constant(&g, 2.5);
        let split = bony_decompose(&c, &h).unwrap();
        assert!(split.sum().relative_l2_error(&h.scale(2.5)) < 1e-12);
    }

    #[test]
    fn zero_factor_gives_zero_parts() {
        let g = grid();
        let h = GaussianEnsemble::default().field(&g, 1).unwrap();
        let z = Field::zeros(&g);
        let split = bony_decompose(&h, &z).unwrap();
        assert_eq!(split.tfg.sup_norm(), 0.0);
        assert_eq!(split.tgf.sup_norm(), 0.0);
        assert_eq!(split.remainder.sup_norm(), 0.0);
    }

    #[test]
    fn reconstruction_on_random_pairs() {
        let g = grid();
        for (f, h) in GaussianEnsemble::default()
            .pairs(&g)
            .unwrap()
            .iter()
            .take(4)
        {
            assert!(bony_reconstruction_error(f, h).unwrap() < 1e-12);
        }
    }

    #[test]
    fn two_mode_remainder_oracle() {
        // cos4x·cos4y: both factors sit in blocks 1..=2 with no low part under
        // the other, so T vanishes and R is the whole product.
        let g = grid();
        let f = Field::from_fn(&g, |x| (4.0 * x[0]).cos());
        let h = Field::from_fn(&g, |x| (4.0 * x[1]).cos());
        let split = bony_decompose(&f, &h).unwrap();
        let prod = f.product(&h).unwrap();
        assert!(split.tfg.sup_norm() < 1e-14);
        assert!(split.tgf.sup_norm() < 1e-14);
        assert!((&split.remainder - &prod).sup_norm() < 1e-13);
        // |k| = 4√2 lies in block 2 only.
        let s = 1.5;
        let idx = BesovIndex::new(s, 2.0, 1.0).unwrap();
        let r = besov_norm(&split.remainder, &idx);
        let expect = 2f64.powf(2.0 * s) * prod.l2_norm();
        assert!((r - expect).abs() < 1e-10 * expect);
        assert!(dyadic_block(&split.remainder, 1).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn remainder_hypotheses() {
        let idx = BesovIndex::new(-1.0, 2.0, 1.0).unwrap();
        let bad = RemainderExponents {
            first: idx,
            second: idx,
            p: 2.0,
            r: 1.0,
        };
        assert!(matches!(
            remainder_estimate_check::<f64>(&[], &bad),
            Err(Error::Contract(_))
        ));
        let one = BesovIndex::new(1.0, 2.0, 1.0).unwrap();
        let ok = RemainderExponents {
            first: one,
            second: one,
            p: 1.0,
            r: 1.0,
        };
        let rep = remainder_estimate_check::<f64>(&[], &ok).unwrap();
        assert_eq!(rep.constant, 0.0);
        assert_eq!(ok.target(2).s, 2.0);
    }

    #[test]
    fn holder_split_validation() {
        assert!(HolderSplit::sup_times(2.0_f64).validate().is_ok());
        let bad = HolderSplit {
            theta: 2.0_f64,
            theta1: 2.0,
            theta2: 2.0,
            theta3: f64::INFINITY,
            theta4: 2.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn composition_identity_and_contract() {
        let g = grid();
        let e = GaussianEnsemble::default();
        let times = [0.0, 0.25, 0.5];
        let v = e.series(&g, 0, &times).unwrap();
        let idx = BesovIndex::new(1.0, 2.0, 1.0).unwrap();
        let (l, r) = composition_estimate_terms(&v, &|x| x, &idx, 2.0).unwrap();
        assert!(l <= r);
        assert!(composition_estimate_terms(&v, &|x: f64| x + 1.0, &idx, 2.0).is_err());
        let f = sound_speed_perturbation(1.4_f64, 1.0, 1.0);
        assert_eq!(f(0.0), 0.0);
    }
}
