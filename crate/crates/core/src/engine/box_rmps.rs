//! Coordinate pattern search on a box, used to check the sublinear rate bound
//! for convex objectives.

use super::BooomConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRmpsResult {
    pub x_best: Vec<f64>,
    pub g_best: f64,
    /// `(k, g(x))` at the `k`-th step reduction, `k` starting at 1.
    pub reduction_events: Vec<(usize, f64)>,
    pub evaluations: usize,
}

/// Polls `x ± s e_m` (clipped to the box) for every coordinate, moves to the
/// best strict improvement, and divides `s` by `cfg.rho` after every
/// unsuccessful poll. Stops when `s <= cfg.phi` or after `cfg.max_iter` polls.
pub fn box_rmps<G>(g: G, lower: &[f64], upper: &[f64], start: &[f64], cfg: &BooomConfig) -> Result<BoxRmpsResult>
where
    G: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    let n = start.len();
    if n == 0 || lower.len() != n || upper.len() != n {
        return Err(Error::arg("box bounds and start must have the same nonzero length"));
    }
    for m in 0..n {
        if !(lower[m] < upper[m]) {
            return Err(Error::arg(format!("empty box in coordinate {}", m + 1)));
        }
        if !(lower[m] <= start[m] && start[m] <= upper[m]) {
            return Err(Error::arg(format!("start lies outside the box in coordinate {}", m + 1)));
        }
    }

    let mut x = start.to_vec();
    let mut gx = g(&x);
    let mut evaluations = 1;
    let mut s = cfg.s_initial;
    let mut events = Vec::new();
    let mut polls = 0;
    let mut cand = x.clone();

    while s > cfg.phi && polls < cfg.max_iter {
        polls += 1;
        let mut best: Option<(usize, f64, f64)> = None;
        for k in 1..=2 * n {
            let m = (k - 1) / 2;
            let delta = if k % 2 == 1 { -s } else { s };
            let moved = (x[m] + delta).clamp(lower[m], upper[m]);
            cand.copy_from_slice(&x);
            cand[m] = moved;
            let v = g(&cand);
            evaluations += 1;
            if v.is_finite() && best.is_none_or(|(_, _, b)| v < b) {
                best = Some((m, moved, v));
            }
        }
        match best {
            Some((m, moved, v)) if v < gx => {
                x[m] = moved;
                gx = v;
            }
            _ => {
                s /= cfg.rho;
                events.push((events.len() + 1, gx));
            }
        }
    }
    Ok(BoxRmpsResult { x_best: x, g_best: gx, reduction_events: events, evaluations })
}
