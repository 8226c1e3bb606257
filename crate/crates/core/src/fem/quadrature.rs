use crate::error::{invalid, Result};

/// Quadrature on the reference simplex. Points are barycentric; weights sum
/// to the reference measure (1 for the unit segment, 1/2 for the unit
/// triangle).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
    pub dim: usize,
}

impl QuadratureRule {
    pub fn reference_measure(&self) -> f64 {
        if self.dim == 1 {
            1.0
        } else {
            0.5
        }
    }

    /// Smallest built-in rule exact for polynomials of `degree` on a simplex
    /// of dimension `dim`.
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        match dim {
            1 => Self::gauss_line(degree),
            2 => Self::triangle(degree),
            _ => Err(invalid(format!("no quadrature for dimension {dim}"))),
        }
    }

    /// Gauss-Legendre on [0, 1].
    pub fn gauss_line(degree: usize) -> Result<Self> {
        let n = degree / 2 + 1;
        let (xs, ws): (&[f64], &[f64]) = match n {
            1 => (&[0.0], &[2.0]),
            2 => (&[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8], &[1.0, 1.0]),
            3 => (
                &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
                &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
            ),
            4 => (
                &[
                    -0.861_136_311_594_052_6,
                    -0.339_981_043_584_856_3,
                    0.339_981_043_584_856_3,
                    0.861_136_311_594_052_6,
                ],
                &[
                    0.347_854_845_137_453_9,
                    0.652_145_154_862_546_1,
                    0.652_145_154_862_546_1,
                    0.347_854_845_137_453_9,
                ],
            ),
            5 => (
                &[
                    -0.906_179_845_938_664,
                    -0.538_469_310_105_683,
                    0.0,
                    0.538_469_310_105_683,
                    0.906_179_845_938_664,
                ],
                &[
                    0.236_926_885_056_189_1,
                    0.478_628_670_499_366_5,
                    0.568_888_888_888_888_9,
                    0.478_628_670_499_366_5,
                    0.236_926_885_056_189_1,
                ],
            ),
            _ => return Err(invalid(format!("1D quadrature degree {degree} not available"))),
        };
        let points = xs
            .iter()
            .map(|&x| {
                let t = 0.5 * (x + 1.0);
                [1.0 - t, t, 0.0]
            })
            .collect();
        let weights = ws.iter().map(|w| 0.5 * w).collect();
        Ok(QuadratureRule {
            points,
            weights,
            degree: 2 * n - 1,
            dim: 1,
        })
    }

    /// Symmetric triangle rules (centroid, 3-point, and Dunavant 6/7-point).
    pub fn triangle(degree: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut orbit3 = |a: f64, b: f64, w: f64| {
            for p in [[a, b, b], [b, a, b], [b, b, a]] {
                points.push(p);
                weights.push(0.5 * w);
            }
        };
        let exact = match degree {
            0 | 1 => 1,
            2 => {
                orbit3(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
                2
            }
            3 | 4 => {
                orbit3(0.108_103_018_168_070, 0.445_948_490_915_965, 0.223_381_589_678_011);
                orbit3(0.816_847_572_980_459, 0.091_576_213_509_771, 0.109_951_743_655_322);
                4
            }
            5 => {
                orbit3(0.059_715_871_789_770, 0.470_142_064_105_115, 0.132_394_152_788_506);
                orbit3(0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827);
                points.push([1.0 / 3.0; 3]);
                weights.push(0.5 * 0.225);
                5
            }
            _ => return Err(invalid(format!("2D quadrature degree {degree} not available"))),
        };
        if exact == 1 {
            points.push([1.0 / 3.0; 3]);
            weights.push(0.5);
        }
        Ok(QuadratureRule {
            points,
            weights,
            degree: exact,
            dim: 2,
        })
    }
}
