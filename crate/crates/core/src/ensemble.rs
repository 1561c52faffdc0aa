//! Discretized inhomogeneous broadening of the Raman transition.
//!
//! All widths are standard deviations of Gaussian line shapes. An atom (node)
//! carries a two-photon detuning `delta21` and a one-photon detuning `delta31`;
//! its Raman detuning under a control field with parameter `f` is
//! `delta21 + delta31 * f`. Each component splits into a natural part, which
//! no external field can invert, and a controlled part, which RECRIB flips.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Weight below which (relative to the largest weight) a node is ignored by
/// grid-resolution guards.
pub const NEGLIGIBLE_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningNode {
    pub delta21: f64,
    pub delta31: f64,
    /// Natural (non-invertible) part of `delta21`.
    pub delta21_nat: f64,
    /// Natural (non-invertible) part of `delta31`.
    pub delta31_nat: f64,
    pub weight: f64,
    /// Comb line index `n_j`; zero for Gaussian ensembles.
    pub comb_index: i64,
}

impl DetuningNode {
    pub fn raman_detuning(&self, f: f64) -> f64 {
        self.delta21 + self.delta31 * f
    }

    /// Flip the controlled parts of both detunings, keeping the natural ones.
    pub fn inverted(&self) -> Self {
        Self {
            delta21: 2.0 * self.delta21_nat - self.delta21,
            delta31: 2.0 * self.delta31_nat - self.delta31,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    GaussHermite,
    UniformTruncated,
    /// Single node at line center (delta-distribution limit).
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineShape {
    Gaussian,
    Comb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombParams {
    pub spacing: f64,
    pub tooth_width: f64,
    pub n_lines: usize,
    pub nodes_per_tooth: usize,
    /// Standard deviation of the Gaussian comb envelope; infinite for a flat comb.
    pub envelope_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    shape: LineShape,
    natural_width_31: f64,
    controlled_width_31: f64,
    width_21: f64,
    controlled_width_21: f64,
    comb: Option<CombParams>,
    nodes: Vec<DetuningNode>,
}

/// Widths of the four independent Gaussian broadening components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianWidths {
    #[serde(default)]
    pub controlled_31: f64,
    #[serde(default)]
    pub natural_31: f64,
    #[serde(default)]
    pub controlled_21: f64,
    #[serde(default)]
    pub natural_21: f64,
}

fn axis(width: f64, n: usize, rule: QuadratureRule) -> (Vec<f64>, Vec<f64>) {
    if width == 0.0 || rule == QuadratureRule::Center {
        return (vec![0.0], vec![1.0]);
    }
    match rule {
        QuadratureRule::GaussHermite => quadrature::gaussian_gh(width, n),
        QuadratureRule::UniformTruncated => quadrature::gaussian_uniform(width, n),
        QuadratureRule::Center => unreachable!(),
    }
}

/// One-dimensional Gaussian ensemble on the controlled `delta31` axis.
pub fn build_gaussian_ensemble(width: f64, n_nodes: usize, rule: QuadratureRule) -> Result<EnsembleSpec> {
    EnsembleSpec::gaussian(
        GaussianWidths {
            controlled_31: width,
            ..Default::default()
        },
        n_nodes,
        n_nodes,
        rule,
    )
}

/// Frequency comb on the `delta31` axis: `n_lines` Gaussian teeth of width
/// `tooth_width` centred on multiples of `spacing`, under a Gaussian envelope.
pub fn build_comb_ensemble(
    spacing: f64,
    tooth_width: f64,
    n_lines: usize,
    nodes_per_tooth: usize,
    envelope_width: f64,
) -> Result<EnsembleSpec> {
    if !(spacing > 0.0) {
        return Err(Error::NonPositiveWidth(spacing));
    }
    if n_lines.is_multiple_of(2) || n_lines < 3 {
        return Err(Error::EvenLineCount(n_lines));
    }
    if !(tooth_width >= 0.0) || tooth_width >= spacing / 4.0 {
        return Err(Error::UnresolvedComb {
            tooth_width,
            spacing,
        });
    }
    if nodes_per_tooth == 0 {
        return Err(Error::TooFewNodes(0));
    }
    if !(envelope_width > 0.0) {
        return Err(Error::NonPositiveWidth(envelope_width));
    }
    let (local_x, local_w) = if tooth_width == 0.0 || nodes_per_tooth == 1 {
        (vec![0.0], vec![1.0])
    } else {
        quadrature::gaussian_gh(tooth_width, nodes_per_tooth)
    };
    let half = (n_lines / 2) as i64;
    let mut nodes = Vec::with_capacity(n_lines * local_x.len());
    for n in -half..=half {
        let center = n as f64 * spacing;
        for (&dx, &dw) in local_x.iter().zip(&local_w) {
            let d = center + dx;
            let env = if envelope_width.is_infinite() {
                1.0
            } else {
                (-0.5 * (d / envelope_width).powi(2)).exp()
            };
            nodes.push(DetuningNode {
                delta21: 0.0,
                delta31: d,
                delta21_nat: 0.0,
                delta31_nat: d,
                weight: dw * env,
                comb_index: n,
            });
        }
    }
    normalize(&mut nodes);
    Ok(EnsembleSpec {
        shape: LineShape::Comb,
        natural_width_31: tooth_width,
        controlled_width_31: 0.0,
        width_21: 0.0,
        controlled_width_21: 0.0,
        comb: Some(CombParams {
            spacing,
            tooth_width,
            n_lines,
            nodes_per_tooth,
            envelope_width,
        }),
        nodes,
    })
}

fn normalize(nodes: &mut [DetuningNode]) {
    let total: f64 = nodes.iter().map(|n| n.weight).sum();
    for n in nodes.iter_mut() {
        n.weight /= total;
    }
}

impl EnsembleSpec {
    /// Tensor-product Gaussian ensemble. Controlled axes use `n_nodes` points,
    /// natural axes `n_natural`; zero-width axes collapse to a single node.
    pub fn gaussian(widths: GaussianWidths, n_nodes: usize, n_natural: usize, rule: QuadratureRule) -> Result<Self> {
        let all = [widths.controlled_31, widths.natural_31, widths.controlled_21, widths.natural_21];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || all.iter().all(|w| *w == 0.0) {
            let bad = all.iter().copied().find(|w| !(*w > 0.0)).unwrap_or(0.0);
            return Err(Error::NonPositiveWidth(bad));
        }
        if rule != QuadratureRule::Center {
            if n_nodes < 3 {
                return Err(Error::TooFewNodes(n_nodes));
            }
            if n_natural < 3 && (widths.natural_31 > 0.0 || widths.natural_21 > 0.0) {
                return Err(Error::TooFewNodes(n_natural));
            }
        }
        let c31 = axis(widths.controlled_31, n_nodes, rule);
        let n31 = axis(widths.natural_31, n_natural, rule);
        let c21 = axis(widths.controlled_21, n_nodes, rule);
        let n21 = axis(widths.natural_21, n_natural, rule);
        let mut nodes = Vec::with_capacity(c31.0.len() * n31.0.len() * c21.0.len() * n21.0.len());
        for (a, wa) in c31.0.iter().zip(&c31.1) {
            for (b, wb) in n31.0.iter().zip(&n31.1) {
                for (c, wc) in c21.0.iter().zip(&c21.1) {
                    for (d, wd) in n21.0.iter().zip(&n21.1) {
                        nodes.push(DetuningNode {
                            delta21: c + d,
                            delta31: a + b,
                            delta21_nat: *d,
                            delta31_nat: *b,
                            weight: wa * wb * wc * wd,
                            comb_index: 0,
                        });
                    }
                }
            }
        }
        nodes.sort_by(|p, q| {
            p.delta31
                .total_cmp(&q.delta31)
                .then(p.delta21.total_cmp(&q.delta21))
        });
        normalize(&mut nodes);
        Ok(Self {
            shape: LineShape::Gaussian,
            natural_width_31: widths.natural_31,
            controlled_width_31: widths.controlled_31,
            width_21: widths.natural_21,
            controlled_width_21: widths.controlled_21,
            comb: None,
            nodes,
        })
    }

    pub fn shape(&self) -> LineShape {
        self.shape
    }
    pub fn nodes(&self) -> &[DetuningNode] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn natural_width_31(&self) -> f64 {
        self.natural_width_31
    }
    pub fn controlled_width_31(&self) -> f64 {
        self.controlled_width_31
    }
    pub fn width_21(&self) -> f64 {
        self.width_21
    }
    pub fn controlled_width_21(&self) -> f64 {
        self.controlled_width_21
    }
    pub fn comb(&self) -> Option<&CombParams> {
        self.comb.as_ref()
    }

    pub fn weight_sum(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// The RECRIB map: every controlled detuning flips sign.
    pub fn inverted(&self) -> Self {
        Self {
            nodes: self.nodes.iter().map(DetuningNode::inverted).collect(),
            ..self.clone()
        }
    }

    /// Root-mean-square Raman detuning at control parameter `f`.
    pub fn raman_width(&self, f: f64) -> f64 {
        let mean: f64 = self.nodes.iter().map(|n| n.weight * n.raman_detuning(f)).sum();
        self.nodes
            .iter()
            .map(|n| n.weight * (n.raman_detuning(f) - mean).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Irreversible (natural) Raman width at control parameter `f`.
    pub fn natural_raman_width(&self, f: f64) -> f64 {
        (self.width_21.powi(2) + (f * self.natural_width_31).powi(2)).sqrt()
    }

    /// Largest |detuning| over nodes with non-negligible weight.
    pub fn max_weighted<F: Fn(&DetuningNode) -> f64>(&self, value: F) -> f64 {
        let wmax = self.nodes.iter().map(|n| n.weight).fold(0.0, f64::max);
        self.nodes
            .iter()
            .filter(|n| n.weight >= NEGLIGIBLE_WEIGHT * wmax)
            .map(|n| value(n).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_delta31(&self) -> f64 {
        self.max_weighted(|n| n.delta31)
    }

    /// Free-induction kernel `sum_j w_j exp(-i Delta_R,j t)` at fixed `f`.
    pub fn free_induction(&self, f: f64, t: f64) -> num_complex::Complex64 {
        self.nodes
            .iter()
            .map(|n| num_complex::Complex64::from_polar(n.weight, -n.raman_detuning(f) * t))
            .sum()
    }

    /// Per-tooth summed weights, indexed from line `-(n_lines-1)/2`.
    pub fn tooth_weights(&self) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for n in &self.nodes {
            match out.last_mut() {
                Some((idx, w)) if *idx == n.comb_index => *w += n.weight,
                _ => out.push((n.comb_index, n.weight)),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment(e: &EnsembleSpec, p: i32) -> f64 {
        e.nodes().iter().map(|n| n.weight * n.delta31.powi(p)).sum()
    }

    #[test]
    fn center_rule_is_delta() {
        let e = build_gaussian_ensemble(1.0, 1, QuadratureRule::Center).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.nodes()[0].delta31, 0.0);
        assert_eq!(e.nodes()[0].weight, 1.0);
    }

    #[test]
    fn gauss_hermite_moments() {
        let e = build_gaussian_ensemble(1.0, 64, QuadratureRule::GaussHermite).unwrap();
        assert!((e.weight_sum() - 1.0).abs() < 1e-10);
        assert!(moment(&e, 1).abs() < 1e-8);
        assert!((moment(&e, 2) - 1.0).abs() < 1e-6);
        assert!(e.nodes().windows(2).all(|p| p[0].delta31 <= p[1].delta31));
    }

    #[test]
    fn uniform_truncated_second_moment() {
        let e = build_gaussian_ensemble(2.0, 129, QuadratureRule::UniformTruncated).unwrap();
        // Reference: 1e5-point uniform quadrature of the truncated Gaussian.
        let n = 100_000;
        let (mut m0, mut m2) = (0.0, 0.0);
        for i in 0..n {
            let x = -10.0 + 20.0 * (i as f64 + 0.5) / n as f64;
            let g = (-0.5 * (x / 2.0f64).powi(2)).exp();
            m0 += g;
            m2 += g * x * x;
        }
        let reference = m2 / m0;
        assert!((moment(&e, 2) - reference).abs() / reference < 1e-3);
        assert!((moment(&e, 2) - 4.0).abs() / 4.0 < 1e-3);
    }

    #[test]
    fn refinement_reduces_moment_error() {
        // The uniform rule converges to the truncated Gaussian's moment.
        let m = 1_000_000;
        let (mut m0, mut m2) = (0.0, 0.0);
        for i in 0..m {
            let x = -5.0 + 10.0 * (i as f64 + 0.5) / m as f64;
            let g = (-0.5 * x * x).exp();
            m0 += g;
            m2 += g * x * x;
        }
        let reference = m2 / m0;
        let mut last = f64::INFINITY;
        for n in [5usize, 9, 17, 33] {
            let e = build_gaussian_ensemble(1.0, n, QuadratureRule::UniformTruncated).unwrap();
            let err = (moment(&e, 2) - reference).abs();
            assert!(err <= last, "n={n}: {err} > {last}");
            last = err;
        }
    }

    #[test]
    fn gaussian_errors() {
        assert_eq!(
            build_gaussian_ensemble(0.0, 10, QuadratureRule::GaussHermite),
            Err(Error::NonPositiveWidth(0.0))
        );
        assert_eq!(
            build_gaussian_ensemble(1.0, 2, QuadratureRule::GaussHermite),
            Err(Error::TooFewNodes(2))
        );
    }

    #[test]
    fn degenerate_comb() {
        let e = build_comb_ensemble(1.0, 0.0, 5, 1, f64::INFINITY).unwrap();
        let d: Vec<f64> = e.nodes().iter().map(|n| n.delta31).collect();
        assert_eq!(d, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        for n in e.nodes() {
            assert!((n.weight - 0.2).abs() < 1e-15);
            assert_eq!(n.delta31, n.comb_index as f64);
        }
    }

    #[test]
    fn comb_symmetry() {
        let e = build_comb_ensemble(1.0, 0.05, 21, 7, 10.0).unwrap();
        assert!((e.weight_sum() - 1.0).abs() < 1e-10);
        let teeth = e.tooth_weights();
        assert_eq!(teeth.len(), 21);
        for i in 0..teeth.len() {
            let j = teeth.len() - 1 - i;
            assert_eq!(teeth[i].0, -teeth[j].0);
            assert!((teeth[i].1 - teeth[j].1).abs() < 1e-12);
        }
    }

    #[test]
    fn comb_tooth_weights_follow_envelope() {
        let (spacing, gamma, width) = (1.0, 0.1, 10.0);
        let e = build_comb_ensemble(spacing, gamma, 11, 16, width).unwrap();
        // Oracle: midpoint integral of envelope x tooth over each tooth.
        let tooth_integral = |n: i64| {
            let c = n as f64 * spacing;
            let m = 20_000;
            let h = 12.0 * gamma / m as f64;
            (0..m)
                .map(|i| {
                    let x = c - 6.0 * gamma + h * (i as f64 + 0.5);
                    (-0.5 * ((x - c) / gamma).powi(2)).exp() * (-0.5 * (x / width).powi(2)).exp() * h
                })
                .sum::<f64>()
        };
        let teeth = e.tooth_weights();
        for pair in teeth.windows(2) {
            let ratio = pair[1].1 / pair[0].1;
            let oracle = tooth_integral(pair[1].0) / tooth_integral(pair[0].0);
            assert!((ratio - oracle).abs() / oracle < 1e-4);
        }
    }

    #[test]
    fn comb_errors() {
        assert!(matches!(build_comb_ensemble(1.0, 0.3, 5, 3, 5.0), Err(Error::UnresolvedComb { .. })));
        assert_eq!(build_comb_ensemble(1.0, 0.1, 4, 3, 5.0), Err(Error::EvenLineCount(4)));
    }

    #[test]
    fn inversion_keeps_natural_part() {
        let e = EnsembleSpec::gaussian(
            GaussianWidths {
                controlled_31: 1.0,
                natural_31: 0.1,
                ..Default::default()
            },
            9,
            5,
            QuadratureRule::GaussHermite,
        )
        .unwrap();
        let inv = e.inverted();
        for (a, b) in e.nodes().iter().zip(inv.nodes()) {
            assert!((a.delta31 + b.delta31 - 2.0 * a.delta31_nat).abs() < 1e-14);
        }
        for (a, b) in e.nodes().iter().zip(inv.inverted().nodes()) {
            assert!((a.delta31 - b.delta31).abs() < 1e-14);
            assert_eq!(a.weight, b.weight);
        }
    }
}
