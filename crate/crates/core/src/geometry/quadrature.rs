use crate::error::{Error, Result};

/// Symmetric Gauss rule on the reference triangle (0,0)-(1,0)-(0,1).
///
/// Weights are positive and sum to the reference area 1/2, so quadrature of
/// non-negative integrands is non-negative.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub order: usize,
    /// (xi, eta) on the reference triangle.
    pub points: Vec<(f64, f64)>,
    /// Reference-triangle weights.
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Rule exact for polynomials of degree `order` (1, 2, 4 or 5).
    pub fn with_order(order: usize) -> Result<Quadrature> {
        // Barycentric weights below sum to 1; reference weights to 1/2.
        let (order, raw): (usize, Vec<(f64, f64, f64)>) = match order {
            1 => (1, vec![(1.0, 1.0 / 3.0, 1.0 / 3.0)]),
            2 | 3 => (
                2,
                vec![
                    (1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0),
                    (1.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0),
                    (1.0 / 3.0, 1.0 / 6.0, 2.0 / 3.0),
                ],
            ),
            4 => {
                let (w1, a1) = (0.223381589678011, 0.445948490915965);
                let (w2, a2) = (0.109951743655322, 0.091576213509771);
                (4, symmetric_orbit3(w1, a1).into_iter().chain(symmetric_orbit3(w2, a2)).collect())
            }
            5 => {
                let mut pts = vec![(0.225, 1.0 / 3.0, 1.0 / 3.0)];
                let (w1, a1) = (0.132394152788506, 0.470142064105115);
                let (w2, a2) = (0.125939180544827, 0.101286507323456);
                pts.extend(symmetric_orbit3(w1, a1));
                pts.extend(symmetric_orbit3(w2, a2));
                (5, pts)
            }
            other => {
                return Err(Error::InvalidArg(format!(
                    "no quadrature rule of order {other}; use 1, 2, 4 or 5"
                )))
            }
        };
        let points = raw.iter().map(|&(_, x, e)| (x, e)).collect();
        let weights = raw.iter().map(|&(w, _, _)| 0.5 * w).collect();
        Ok(Quadrature { order, points, weights })
    }
}

/// Three-point orbit (a, a), (1-2a, a), (a, 1-2a), each with weight w.
fn symmetric_orbit3(w: f64, a: f64) -> Vec<(f64, f64, f64)> {
    vec![(w, a, a), (w, 1.0 - 2.0 * a, a), (w, a, 1.0 - 2.0 * a)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_monomial(q: &Quadrature, p: u32, r: u32) -> f64 {
        q.points
            .iter()
            .zip(&q.weights)
            .map(|(&(x, y), &w)| w * x.powi(p as i32) * y.powi(r as i32))
            .sum()
    }

    /// Exact value of the monomial integral over the reference triangle:
    /// p! r! / (p + r + 2)!.
    fn exact_monomial(p: u32, r: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
        fact(p) * fact(r) / fact(p + r + 2)
    }

    #[test]
    fn weights_sum_to_reference_area() {
        for order in [1, 2, 4, 5] {
            let q = Quadrature::with_order(order).unwrap();
            let s: f64 = q.weights.iter().sum();
            assert!((s - 0.5).abs() < 1e-14, "order {order}: sum {s}");
            assert!(q.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn exact_on_monomials_up_to_order() {
        for order in [1usize, 2, 4, 5] {
            let q = Quadrature::with_order(order).unwrap();
            for p in 0..=order as u32 {
                for r in 0..=(order as u32 - p) {
                    let got = integrate_monomial(&q, p, r);
                    let want = exact_monomial(p, r);
                    assert!(
                        (got - want).abs() < 1e-13,
                        "order {order}, x^{p} y^{r}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_unknown_order() {
        assert!(Quadrature::with_order(9).is_err());
    }
}
