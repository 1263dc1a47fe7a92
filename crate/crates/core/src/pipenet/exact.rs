//! Closed-form solution of `−εu' + βu = J`, `J' = 0` on the three-segment
//! tree (one segment into a junction, two out of it).

use super::PipeNetwork;
use crate::error::{Error, Result};
use crate::mfv::bern;

/// Exact solution on one segment with end values `u(0)`, `u(L)`.
#[derive(Debug, Clone, Copy)]
pub struct ExactSegment {
    pub eps: f64,
    pub beta: f64,
    pub length: f64,
    pub u_start: f64,
    pub u_end: f64,
}

impl ExactSegment {
    fn peclet(&self) -> f64 {
        self.beta * self.length / self.eps
    }

    /// `(e^{xt} − 1)/(e^x − 1)` evaluated without overflow.
    fn shape(&self, t: f64) -> f64 {
        let x = self.peclet();
        if x.abs() < 1e-10 {
            t
        } else if x > 0.0 {
            (x * (t - 1.0)).exp() * (-x * t).exp_m1() / (-x).exp_m1()
        } else {
            (x * t).exp_m1() / x.exp_m1()
        }
    }

    fn shape_derivative(&self, t: f64) -> f64 {
        let x = self.peclet();
        if x.abs() < 1e-10 {
            1.0
        } else if x > 0.0 {
            x * (x * (t - 1.0)).exp() / -(-x).exp_m1()
        } else {
            x * (x * t).exp() / x.exp_m1()
        }
    }

    pub fn u(&self, s: f64) -> f64 {
        self.u_start + (self.u_end - self.u_start) * self.shape(s / self.length)
    }

    pub fn du(&self, s: f64) -> f64 {
        (self.u_end - self.u_start) * self.shape_derivative(s / self.length) / self.length
    }

    /// Constant flux `(ε/L)[ℬ(−x)u(0) − ℬ(x)u(L)]`, `x = βL/ε`.
    pub fn flux(&self) -> f64 {
        let x = self.peclet();
        self.eps / self.length * (bern(-x) * self.u_start - bern(x) * self.u_end)
    }
}

#[derive(Debug, Clone)]
pub struct NetworkExact {
    /// Value at the junction.
    pub omega: f64,
    pub segments: [ExactSegment; 3],
}

/// Exact solution on the tree `σ₁: x₀→x₁`, `σ₂, σ₃: x₁→outlets`, with
/// constant `ε` and per-segment `β`, `u(x₀) = boundary[0]` and outlet values
/// `boundary[1]`, `boundary[2]`.
pub fn exact_network_solution(
    net: &PipeNetwork,
    eps: f64,
    beta: &[f64],
    boundary: [f64; 3],
) -> Result<NetworkExact> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("diffusion must be positive, got {eps}")));
    }
    let segs = net.segments();
    let tree = segs.len() == 3
        && beta.len() == 3
        && segs[0].from == net.inlet()
        && segs[1].from == segs[0].to
        && segs[2].from == segs[0].to
        && net.outlets().contains(&segs[1].to)
        && net.outlets().contains(&segs[2].to);
    if !tree {
        return Err(Error::Unsupported(
            "closed-form solution is only available for the three-segment tree".into(),
        ));
    }
    let l = [segs[0].length, segs[1].length, segs[2].length];
    let x: Vec<f64> = (0..3).map(|i| beta[i] * l[i] / eps).collect();
    let num = eps / l[0] * bern(-x[0]) * boundary[0]
        + eps / l[1] * bern(x[1]) * boundary[1]
        + eps / l[2] * bern(x[2]) * boundary[2];
    let den = eps / l[0] * bern(x[0]) + eps / l[1] * bern(-x[1]) + eps / l[2] * bern(-x[2]);
    let omega = num / den;
    let seg = |i: usize, a: f64, b: f64| ExactSegment {
        eps,
        beta: beta[i],
        length: l[i],
        u_start: a,
        u_end: b,
    };
    Ok(NetworkExact {
        omega,
        segments: [
            seg(0, boundary[0], omega),
            seg(1, omega, boundary[1]),
            seg(2, omega, boundary[2]),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::super::build_network;
    use super::super::tests::tree_spec;
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn omega_reference_value() {
        let net = build_network(&tree_spec(), None).unwrap();
        let ex = exact_network_solution(&net, 1.0, &[3.0, 2.0, 1.0], [1.0, 0.0, 0.0]).unwrap();
        // ℬ(−3)/(ℬ(3) + ℬ(−2) + ℬ(−1)) from the raw definition
        let b = |x: f64| x / (x.exp() - 1.0);
        let oracle = b(-3.0) / (b(3.0) + b(-2.0) + b(-1.0));
        assert_relative_eq!(ex.omega, oracle, max_relative = 1e-14);
        assert!((ex.omega - 0.77913).abs() < 5e-6);
    }

    #[test]
    fn pure_diffusion_average() {
        let net = build_network(&tree_spec(), None).unwrap();
        let ex = exact_network_solution(&net, 0.7, &[0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(ex.omega, 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn junction_flux_balance_and_ode() {
        let net = build_network(&tree_spec(), None).unwrap();
        for (eps, beta, bc) in [
            (1.0, [3.0, 2.0, 1.0], [1.0, 0.0, 0.0]),
            (0.02, [3.0, 2.0, 1.0], [1.0, 0.0, 0.0]),
            (0.3, [-1.0, 0.5, -2.0], [0.2, 1.5, -0.7]),
        ] {
            let ex = exact_network_solution(&net, eps, &beta, bc).unwrap();
            let [s1, s2, s3] = ex.segments;
            let scale = s1.flux().abs().max(1.0);
            assert!((s1.flux() - s2.flux() - s3.flux()).abs() < 1e-12 * scale);
            for s in ex.segments {
                assert_relative_eq!(s.u(0.0), s.u_start, max_relative = 1e-12, epsilon = 1e-14);
                assert_relative_eq!(s.u(s.length), s.u_end, max_relative = 1e-12, epsilon = 1e-14);
                for t in [0.1, 0.5, 0.93] {
                    let sv = t * s.length;
                    let j = -s.eps * s.du(sv) + s.beta * s.u(sv);
                    assert!((j - s.flux()).abs() < 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn rejects_other_topologies() {
        let mut spec = tree_spec();
        spec.segments.pop();
        spec.vertices[3].role = super::super::VertexRole::Junction;
        spec.vertices.pop();
        let net = build_network(&spec, None).unwrap();
        assert!(matches!(
            exact_network_solution(&net, 1.0, &[1.0, 1.0], [1.0, 0.0, 0.0]),
            Err(Error::Unsupported(_))
        ));
    }
}
