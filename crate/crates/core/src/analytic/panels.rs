//! Piecewise Chebyshev–Lobatto interpolation tables.

use std::f64::consts::PI;

/// Values at Chebyshev–Lobatto nodes on consecutive panels, evaluated by
/// the barycentric formula.
#[derive(Debug, Clone)]
pub(crate) struct Panels {
    edges: Vec<f64>,
    reference: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
}

/// Ascending Chebyshev–Lobatto nodes on `[−1, 1]` and their barycentric
/// weights.
pub(crate) fn lobatto(degree: usize) -> (Vec<f64>, Vec<f64>) {
    let nodes = (0..=degree).map(|i| -(PI * i as f64 / degree as f64).cos()).collect();
    let weights = (0..=degree)
        .map(|i| {
            let w = if i % 2 == 0 { 1.0 } else { -1.0 };
            if i == 0 || i == degree {
                0.5 * w
            } else {
                w
            }
        })
        .collect();
    (nodes, weights)
}

/// Panel edges covering `[start, end]`: `panels` uniform pieces plus the
/// given interior breakpoints, with near-duplicates merged.
pub(crate) fn panel_edges(start: f64, end: f64, panels: usize, breaks: impl Iterator<Item = f64>) -> Vec<f64> {
    let width = end - start;
    let mut edges: Vec<f64> = (0..=panels)
        .map(|i| if i == panels { end } else { start + width * i as f64 / panels as f64 })
        .collect();
    edges.extend(breaks.filter(|&b| b > start && b < end));
    edges.sort_by(f64::total_cmp);
    let merge = 1e-9 * width;
    let mut out: Vec<f64> = Vec::with_capacity(edges.len());
    for e in edges {
        match out.last() {
            Some(&last) if e - last <= merge => {
                // keep the exact endpoint
                if e == end {
                    *out.last_mut().unwrap() = end;
                }
            }
            _ => out.push(e),
        }
    }
    if out.len() == 1 {
        out.push(end);
    }
    out
}

impl Panels {
    pub(crate) fn new(edges: Vec<f64>, degree: usize) -> Self {
        let (reference, weights) = lobatto(degree);
        let len = (edges.len() - 1) * (degree + 1);
        Panels {
            edges,
            reference,
            weights,
            values: Vec::with_capacity(len),
        }
    }

    pub(crate) fn panel_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub(crate) fn degree(&self) -> usize {
        self.reference.len() - 1
    }

    /// Physical nodes of panel `p`.
    pub(crate) fn nodes(&self, p: usize) -> Vec<f64> {
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let d = self.degree();
        self.reference
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == 0 {
                    a
                } else if i == d {
                    b
                } else {
                    0.5 * (a + b) + 0.5 * (b - a) * x
                }
            })
            .collect()
    }

    pub(crate) fn push_panel(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.reference.len());
        self.values.extend_from_slice(values);
    }

    pub(crate) fn last_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Node values in time order, joints included twice.
    pub(crate) fn node_values(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.panel_count()).flat_map(move |p| {
            let nodes = self.nodes(p);
            let n = nodes.len();
            nodes.into_iter().zip(self.values[p * n..(p + 1) * n].to_vec())
        })
    }

    /// Interpolated value; `t` is clamped to the covered range.
    pub(crate) fn eval(&self, t: f64) -> f64 {
        let last = self.panel_count() - 1;
        let p = self.edges.partition_point(|&e| e <= t).saturating_sub(1).min(last);
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let x = ((2.0 * t - (a + b)) / (b - a)).clamp(-1.0, 1.0);
        let n = self.reference.len();
        barycentric(&self.reference, &self.weights, &self.values[p * n..(p + 1) * n], x)
    }
}

/// Second-form barycentric interpolation.
pub(crate) fn barycentric(nodes: &[f64], weights: &[f64], values: &[f64], x: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((&xi, &wi), &yi) in nodes.iter().zip(weights).zip(values) {
        let d = x - xi;
        if d == 0.0 {
            return yi;
        }
        let c = wi / d;
        num += c * yi;
        den += c;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_function_to_machine_precision() {
        let edges = panel_edges(0.0, 2.0, 8, std::iter::empty());
        let mut t = Panels::new(edges, 16);
        for p in 0..t.panel_count() {
            let v: Vec<f64> = t.nodes(p).iter().map(|&s| (-3.0 * s).exp() * s.sin()).collect();
            t.push_panel(&v);
        }
        for i in 0..=200 {
            let s = 2.0 * i as f64 / 200.0;
            assert!((t.eval(s) - (-3.0 * s).exp() * s.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn edges_include_breakpoints_once() {
        let e = panel_edges(1.0, 2.0, 4, [1.5, 1.6, 1.6 + 1e-12, 3.0].into_iter());
        assert_eq!(e, vec![1.0, 1.25, 1.5, 1.6, 1.75, 2.0]);
    }
}
