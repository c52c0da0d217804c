//! The radial cutoff pair (χ, φ) behind the dyadic decomposition.
//!
//! χ equals 1 on `[0, 3/4]`, vanishes on `[4/3, ∞)` and in between follows a
//! C^∞ transition built from `e^{-s/x}`. The shell profile is defined by
//! telescoping, `φ(t) = χ(t/2) − χ(t)`, so that
//! `χ(t) + Σ_{q=0}^{Q} φ(2^{-q} t) = χ(2^{-Q-1} t)` holds by construction and
//! the partition of unity is exact up to rounding once `2^{-Q-1} t ≤ 3/4`.
//!
//! Only the supports are fixed by the theory; any other admissible profile
//! changes individual block values but not which norms are equivalent.

use crate::scalar::Real;

/// Inner radius of the shell, also where χ stops being identically one.
pub const SHELL_INNER: f64 = 3.0 / 4.0;
/// Radius of the ball supporting χ.
pub const BALL_RADIUS: f64 = 4.0 / 3.0;
/// Outer radius of the shell supporting φ.
pub const SHELL_OUTER: f64 = 8.0 / 3.0;

const TABLE_POINTS: usize = 4097;

#[derive(Debug, Clone)]
pub struct CutoffPair<T: Real> {
    sharpness: T,
    /// χ and φ sampled on a uniform radius grid over `[0, 8/3]`.
    table: Vec<(T, T)>,
}

/// Builds the cutoff pair with the given transition sharpness (`> 0`).
///
/// Larger sharpness flattens the ramp near its ends; any positive value
/// yields an admissible smooth pair.
pub fn build_cutoffs<T: Real>(transition_sharpness: T) -> CutoffPair<T> {
    assert!(
        transition_sharpness > T::zero() && transition_sharpness.is_finite(),
        "transition sharpness must be positive"
    );
    let mut pair = CutoffPair {
        sharpness: transition_sharpness,
        table: Vec::new(),
    };
    let h = T::of(SHELL_OUTER) / T::of_usize(TABLE_POINTS - 1);
    pair.table = (0..TABLE_POINTS)
        .map(|i| {
            let t = h * T::of_usize(i);
            (pair.chi(t), pair.phi(t))
        })
        .collect();
    pair
}

impl<T: Real> Default for CutoffPair<T> {
    fn default() -> Self {
        build_cutoffs(T::one())
    }
}

impl<T: Real> CutoffPair<T> {
    pub fn sharpness(&self) -> T {
        self.sharpness
    }

    fn flat(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else {
            (-self.sharpness / x).exp()
        }
    }

    /// Smooth step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
    fn step(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        if x >= T::one() {
            return T::one();
        }
        let a = self.flat(x);
        let b = self.flat(T::one() - x);
        a / (a + b)
    }

    /// Ball profile χ(t) for `t ≥ 0`.
    pub fn chi(&self, t: T) -> T {
        let inner = T::of(SHELL_INNER);
        let outer = T::of(BALL_RADIUS);
        if t <= inner {
            T::one()
        } else if t >= outer {
            T::zero()
        } else {
            self.step((outer - t) / (outer - inner))
        }
    }

    /// Shell profile φ(t) = χ(t/2) − χ(t).
    pub fn phi(&self, t: T) -> T {
        self.chi(t / T::of(2.0)) - self.chi(t)
    }

    /// Multiplier of block `q` at radius `t`: χ(t) for `q = -1`, φ(2^{-q} t) otherwise.
    pub fn block_profile(&self, q: i32, t: T) -> T {
        if q < 0 {
            self.chi(t)
        } else {
            self.phi(t * T::exp2i(-q))
        }
    }

    /// Radii and (χ, φ) values of the precomputed table.
    pub fn table(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        let h = T::of(SHELL_OUTER) / T::of_usize(TABLE_POINTS - 1);
        self.table
            .iter()
            .enumerate()
            .map(move |(i, &(c, p))| (h * T::of_usize(i), c, p))
    }

    /// Linear interpolation of χ from the table (exact evaluator beyond it).
    pub fn chi_tabulated(&self, t: T) -> T {
        let h = T::of(SHELL_OUTER) / T::of_usize(TABLE_POINTS - 1);
        let x = t / h;
        let i = x.floor().to_usize().unwrap_or(usize::MAX);
        if t < T::zero() || i + 1 >= TABLE_POINTS {
            return self.chi(t);
        }
        let w = x - T::of_usize(i);
        self.table[i].0 * (T::one() - w) + self.table[i + 1].0 * w
    }

    /// `χ(t) + Σ_{q=0}^{q_top} φ(2^{-q} t)` evaluated term by term.
    pub fn partition_sum(&self, t: T, q_top: i32) -> T {
        (-1..=q_top).map(|q| self.block_profile(q, t)).sum()
    }
}
