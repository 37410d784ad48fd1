//! Dyadic lattice arithmetic and axis-aligned square geometry.
//!
//! Squares follow the half-open convention `[a, b) x [c, d)`, so `locate` is
//! unambiguous on boundaries. Non-dyadic squares are first-class (center plus
//! side); the dyadic structure is an optional index.

use crate::{Error, Point, Result};
use serde::{Deserialize, Serialize};

/// Lattice coordinates of a dyadic square: side `2^j`, lower-left corner
/// `(kx * 2^j, ky * 2^j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub j: i32,
    pub kx: i64,
    pub ky: i64,
}

/// An axis-aligned square, optionally carrying its dyadic lattice index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub cx: f64,
    pub cy: f64,
    pub side: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<DyadicIndex>,
}

/// `2^j` as an f64, exact for the exponent range we use.
#[inline]
pub fn pow2(j: i32) -> f64 {
    (2.0f64).powi(j)
}

impl Square {
    /// A general (non-dyadic) square from center and side.
    pub fn new(center: Point, side: f64) -> Self {
        assert!(side > 0.0, "square side must be positive");
        Square {
            cx: center.re,
            cy: center.im,
            side,
            index: None,
        }
    }

    pub fn from_index(idx: DyadicIndex) -> Self {
        let side = pow2(idx.j);
        Square {
            cx: (idx.kx as f64 + 0.5) * side,
            cy: (idx.ky as f64 + 0.5) * side,
            side,
            index: Some(idx),
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    /// Concentric dilation by `lambda` (drops the dyadic index).
    pub fn dilate(&self, lambda: f64) -> Square {
        assert!(lambda > 0.0, "dilation factor must be positive");
        Square {
            cx: self.cx,
            cy: self.cy,
            side: lambda * self.side,
            index: None,
        }
    }

    /// Half-open membership test.
    pub fn contains(&self, z: Point) -> bool {
        let h = self.side / 2.0;
        z.re >= self.cx - h && z.re < self.cx + h && z.im >= self.cy - h && z.im < self.cy + h
    }

    /// `self` a subset of `other` (as half-open boxes).
    pub fn subset_of(&self, other: &Square) -> bool {
        let (ha, hb) = (self.side / 2.0, other.side / 2.0);
        self.cx - ha >= other.cx - hb
            && self.cx + ha <= other.cx + hb
            && self.cy - ha >= other.cy - hb
            && self.cy + ha <= other.cy + hb
    }

    /// The four dyadic children tiling this square.
    pub fn children(&self) -> Result<[Square; 4]> {
        let idx = self
            .index
            .ok_or_else(|| Error::Precondition("children requires a dyadic index".into()))?;
        let j = idx.j - 1;
        let (kx, ky) = (2 * idx.kx, 2 * idx.ky);
        Ok([
            Square::from_index(DyadicIndex { j, kx, ky }),
            Square::from_index(DyadicIndex { j, kx: kx + 1, ky }),
            Square::from_index(DyadicIndex { j, kx, ky: ky + 1 }),
            Square::from_index(DyadicIndex {
                j,
                kx: kx + 1,
                ky: ky + 1,
            }),
        ])
    }

    pub fn parent(&self) -> Result<Square> {
        let idx = self
            .index
            .ok_or_else(|| Error::Precondition("parent requires a dyadic index".into()))?;
        Ok(Square::from_index(DyadicIndex {
            j: idx.j + 1,
            kx: idx.kx.div_euclid(2),
            ky: idx.ky.div_euclid(2),
        }))
    }
}

/// The unique scale-`j` dyadic square containing `z`.
pub fn locate(z: Point, j: i32) -> Square {
    let side = pow2(j);
    Square::from_index(DyadicIndex {
        j,
        kx: (z.re / side).floor() as i64,
        ky: (z.im / side).floor() as i64,
    })
}

/// For a dyadic `Q` of side `2l` and points `z1, z2` in `4Q` with
/// `|z1 - z2| < l`, returns the dyadic square `Q'` of side `l` with
/// `7Q' subset 7Q` and `z1, z2 in 3Q'`.
pub fn dyadicfact_witness(q: &Square, z1: Point, z2: Point) -> Result<Square> {
    let idx = q
        .index
        .ok_or_else(|| Error::Precondition("dyadicfact_witness requires a dyadic Q".into()))?;
    let half = pow2(idx.j - 1); // l, where side(Q) = 2l
    let four_q = q.dilate(4.0);
    if !four_q.contains(z1) || !four_q.contains(z2) {
        return Err(Error::Precondition(format!(
            "points must lie in 4Q (Q side {}, z1 {z1}, z2 {z2})",
            q.side
        )));
    }
    if crate::dist(z1, z2) >= half {
        return Err(Error::Precondition(format!(
            "|z1 - z2| = {} must be < {half}",
            crate::dist(z1, z2)
        )));
    }
    let witness = locate(z1, idx.j - 1);
    debug_assert!(witness.dilate(7.0).subset_of(&q.dilate(7.0)));
    debug_assert!(witness.dilate(3.0).contains(z1) && witness.dilate(3.0).contains(z2));
    Ok(witness)
}
