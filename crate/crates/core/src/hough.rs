//! Hough-transform line fit over sparse points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A line in polar image coordinates: `u*cos(theta) + v*sin(theta) = rho`,
/// with `theta` in `[0, PI)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarLine {
    pub rho: f64,
    pub theta_img: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum HoughError {
    #[error("insufficient points: need at least 2 distinct points, got {0}")]
    InsufficientPoints(usize),
}

/// Accumulator quantization: 1 degree in theta, 2 px in rho.
pub const THETA_BINS: usize = 180;
pub const RHO_BIN_PX: f64 = 2.0;

/// Fits the strongest line through the points with a standard Hough
/// accumulator. Ties are broken toward the smallest theta, then the
/// smallest rho. Exact duplicate points are collapsed before voting.
pub fn hough_line(points: &[(f64, f64)]) -> Result<PolarLine, HoughError> {
    use std::cell::RefCell;
    use std::sync::OnceLock;

    static TRIG: OnceLock<Vec<(f64, f64, f64)>> = OnceLock::new();
    thread_local! {
        // one accumulator row and a bin-index scratch list, reused across
        // calls; this sits on the per-tick hot path of the navigation loop
        static ROW: RefCell<(Vec<u32>, Vec<u32>)> = const { RefCell::new((Vec::new(), Vec::new())) };
    }

    let mut distinct: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        if !distinct.iter().any(|q| q.0 == p.0 && q.1 == p.1) {
            distinct.push(p);
        }
    }
    if distinct.len() < 2 {
        return Err(HoughError::InsufficientPoints(distinct.len()));
    }

    let rho_max = distinct
        .iter()
        .map(|&(u, v)| (u * u + v * v).sqrt())
        .fold(0.0_f64, f64::max)
        .max(RHO_BIN_PX);
    let rho_bins = (2.0 * rho_max / RHO_BIN_PX).ceil() as usize + 1;
    let inv_bin = 1.0 / RHO_BIN_PX;

    let thetas = TRIG.get_or_init(|| {
        (0..THETA_BINS)
            .map(|i| {
                let t = (i as f64).to_radians();
                (t, t.cos(), t.sin())
            })
            .collect()
    });

    ROW.with(|cell| {
        let (row, touched) = &mut *cell.borrow_mut();
        row.clear();
        row.resize(rho_bins, 0);
        touched.clear();
        touched.reserve(distinct.len());

        // global argmax with ties broken toward smaller theta then smaller
        // rho: theta ascends in the outer loop with a strict comparison; the
        // per-row best prefers the smaller rho index on equal votes
        let mut best_votes = 0u32;
        let mut best = (0usize, 0usize);
        for (ti, &(_, c, s)) in thetas.iter().enumerate() {
            // vectorizable pass: bin index per point
            touched.clear();
            touched.extend(distinct.iter().map(|&(u, v)| {
                // (rho + rho_max) >= 0, so the cast truncation is a floor
                (((u * c + v * s + rho_max) * inv_bin) as u32).min(rho_bins as u32 - 1)
            }));
            // scalar pass: vote and track the row best (smaller rho wins ties)
            let mut row_votes = 0u32;
            let mut row_ri = usize::MAX;
            for &ri in touched.iter() {
                let ri = ri as usize;
                let votes = row[ri] + 1;
                row[ri] = votes;
                if votes > row_votes || (votes == row_votes && ri < row_ri) {
                    row_votes = votes;
                    row_ri = ri;
                }
            }
            if row_votes > best_votes {
                best_votes = row_votes;
                best = (ti, row_ri);
            }
            // reset only the bins this row used
            for &ri in touched.iter() {
                row[ri as usize] = 0;
            }
        }

        Ok(PolarLine {
            rho: (best.1 as f64 + 0.5) * RHO_BIN_PX - rho_max,
            theta_img: thetas[best.0].0,
        })
    })
}
