//! Exact lower-left Pareto boundary of `{λ ≥ 0 : s·λ₁ + t·λ₂ ≥ r for every pair}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sampled pair: `s = ‖ΔS‖`, `t = ‖ΔT‖`, `r = ‖ΔT − ΔS‖` (already reduced by `μ‖Δc‖`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub s: f64,
    pub t: f64,
    pub r: f64,
}

impl Constraint {
    pub fn new(s: f64, t: f64, r: f64) -> Self {
        Constraint { s, t, r }
    }

    /// `s·λ₁ + t·λ₂ − r`; nonnegative when the point satisfies the constraint.
    pub fn slack(&self, l1: f64, l2: f64) -> f64 {
        self.s * l1 + self.t * l2 - self.r
    }
}

/// Line `λ₂ = a − b·λ₁` with `b ≥ 0`.
#[derive(Debug, Clone, Copy)]
struct Line {
    a: f64,
    b: f64,
}

impl Line {
    fn at(&self, x: f64) -> f64 {
        self.a - self.b * x
    }
}

/// `x` where two lines cross.
fn crossing(p: &Line, q: &Line) -> f64 {
    (p.a - q.a) / (p.b - q.b)
}

/// Pareto vertices sorted by `λ₁` strictly increasing, `λ₂` strictly decreasing.
///
/// The boundary is the graph of `g(λ₁) = max(0, maxᵢ (rᵢ − sᵢλ₁)/tᵢ)` over
/// `[L, Z]`, where `L` is the largest lower bound on `λ₁` from pairs with
/// `t = 0`, and `Z` is where `g` first reaches its minimum.
pub fn pareto_frontier(constraints: &[Constraint]) -> Result<Vec<[f64; 2]>> {
    let mut left: f64 = 0.0;
    let mut floor: f64 = 0.0;
    let mut lines = Vec::new();
    for (index, c) in constraints.iter().enumerate() {
        if !(c.s.is_finite() && c.t.is_finite() && c.r.is_finite()) || c.s < 0.0 || c.t < 0.0 {
            return Err(Error::domain(
                "constraint",
                format!("pair #{index} has invalid entries ({}, {}, {})", c.s, c.t, c.r),
            ));
        }
        if c.r <= 0.0 {
            continue;
        }
        match (c.s > 0.0, c.t > 0.0) {
            (false, false) => {
                return Err(Error::InconsistentPair {
                    index,
                    residual: c.r,
                })
            }
            (true, false) => left = left.max(c.r / c.s),
            (false, true) => floor = floor.max(c.r / c.t),
            (true, true) => lines.push(Line {
                a: c.r / c.t,
                b: c.s / c.t,
            }),
        }
    }
    lines.push(Line { a: floor, b: 0.0 });

    let hull = upper_envelope(&lines, left);

    // Walk the envelope from λ₁ = left until the flat line takes over.
    let g = |x: f64| envelope(&hull, x);
    let mut vertices = vec![[left, g(left)]];
    for k in 0..hull.len() - 1 {
        let x = crossing(&hull[k], &hull[k + 1]);
        let y = g(x);
        let last = vertices.last().expect("nonempty");
        if x > last[0] && y < last[1] {
            vertices.push([x, y]);
        }
    }
    Ok(vertices)
}

/// Lines of the upper envelope on `[left, ∞)`, slopes strictly decreasing.
fn upper_envelope(lines: &[Line], left: f64) -> Vec<Line> {
    // The top line at `left` dominates every line at least as steep that
    // starts no higher; dropping those first keeps the sort short.
    let top = *lines
        .iter()
        .max_by(|p, q| p.at(left).total_cmp(&q.at(left)).then(q.b.total_cmp(&p.b)))
        .expect("floor line present");
    let mut lines: Vec<Line> = lines.iter().copied().filter(|l| l.b < top.b).collect();
    lines.push(top);
    // steepest descent first, ties keep the larger intercept
    lines.sort_unstable_by(|p, q| q.b.total_cmp(&p.b).then(q.a.total_cmp(&p.a)));
    lines.dedup_by(|q, p| q.b == p.b);
    let mut hull: Vec<Line> = Vec::with_capacity(lines.len());
    for l in lines {
        while hull.len() >= 2 {
            let (p, q) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // q is useless if l overtakes p no later than q does
            if crossing(&p, &l) <= crossing(&p, &q) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(l);
    }
    let mut start = 0;
    while start + 1 < hull.len() && crossing(&hull[start], &hull[start + 1]) <= left {
        start += 1;
    }
    hull.split_off(start)
}

fn envelope(hull: &[Line], x: f64) -> f64 {
    hull.iter().map(|l| l.at(x)).fold(0.0, f64::max)
}

/// Smallest slack of `(l1, l2)` over all constraints.
pub fn worst_slack(constraints: &[Constraint], l1: f64, l2: f64) -> f64 {
    constraints
        .iter()
        .map(|c| c.slack(l1, l2))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: for each λ₁ on a grid, smallest feasible λ₂ on the grid.
    fn grid_feasible(cs: &[Constraint], l1: f64, l2: f64) -> bool {
        cs.iter().all(|c| c.slack(l1, l2) >= -1e-12)
    }

    #[test]
    fn identical_maps_give_origin() {
        let cs = vec![Constraint::new(1.0, 1.0, 0.0); 5];
        assert_eq!(pareto_frontier(&cs).unwrap(), vec![[0.0, 0.0]]);
        assert_eq!(pareto_frontier(&[]).unwrap(), vec![[0.0, 0.0]]);
    }

    #[test]
    fn single_pair_segment() {
        let f = pareto_frontier(&[Constraint::new(1.0, 1.0, 0.3)]).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f[0][0] - 0.0).abs() < 1e-15 && (f[0][1] - 0.3).abs() < 1e-15);
        assert!((f[1][0] - 0.3).abs() < 1e-15 && f[1][1].abs() < 1e-15);
    }

    #[test]
    fn two_pairs_match_grid_oracle() {
        let cs = [Constraint::new(1.0, 1.0, 0.2), Constraint::new(2.0, 1.0, 0.5)];
        let f = pareto_frontier(&cs).unwrap();
        // oracle: min over the 1e-3 grid of λ₂ for each λ₁ column
        let mut oracle = Vec::new();
        for i in 0..1000 {
            let l1 = i as f64 * 1e-3;
            if let Some(j) = (0..1000).find(|&j| grid_feasible(&cs, l1, j as f64 * 1e-3)) {
                oracle.push([l1, j as f64 * 1e-3]);
            }
        }
        // the grid column λ₁ = 0 starts at λ₂ = 0.5, and λ₂ reaches 0 at λ₁ = 0.25
        assert_eq!(oracle[0], [0.0, 0.5]);
        let first_zero = oracle.iter().find(|p| p[1] == 0.0).unwrap();
        assert!((first_zero[0] - 0.25).abs() < 1e-9);
        assert_eq!(f.len(), 2);
        assert!((f[0][0]).abs() < 1e-15 && (f[0][1] - 0.5).abs() < 1e-15);
        assert!((f[1][0] - 0.25).abs() < 1e-15 && f[1][1].abs() < 1e-15);
    }

    #[test]
    fn axis_constraints() {
        let cs = [
            Constraint::new(2.0, 0.0, 0.4), // λ₁ ≥ 0.2
            Constraint::new(0.0, 1.0, 0.1), // λ₂ ≥ 0.1
            Constraint::new(1.0, 1.0, 0.6),
        ];
        let f = pareto_frontier(&cs).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f[0][0] - 0.2).abs() < 1e-15 && (f[0][1] - 0.4).abs() < 1e-15);
        assert!((f[1][0] - 0.5).abs() < 1e-15 && (f[1][1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_pair_is_reported() {
        let cs = [Constraint::new(1.0, 1.0, 0.1), Constraint::new(0.0, 0.0, 1e-3)];
        assert!(matches!(
            pareto_frontier(&cs),
            Err(Error::InconsistentPair { index: 1, .. })
        ));
    }

    #[test]
    fn redundant_constraints_are_dropped() {
        let cs = [
            Constraint::new(1.0, 1.0, 0.3),
            Constraint::new(1.0, 1.0, 0.1),
            Constraint::new(3.0, 1.0, 0.2),
            Constraint::new(1.0, 3.0, 0.2),
        ];
        let f = pareto_frontier(&cs).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f[0][1] - 0.3).abs() < 1e-15 && (f[1][0] - 0.3).abs() < 1e-15);
    }
}
