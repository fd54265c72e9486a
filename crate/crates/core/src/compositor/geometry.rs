use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative determinant below which a point configuration counts as
/// collinear.
pub const COLLINEARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Landmark {
    LeftEye,
    RightEye,
    Nose,
    LeftMouth,
    RightMouth,
}

impl Landmark {
    pub const ALL: [Landmark; 5] = [
        Landmark::LeftEye,
        Landmark::RightEye,
        Landmark::Nose,
        Landmark::LeftMouth,
        Landmark::RightMouth,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub left_eye: Point,
    pub right_eye: Point,
    pub nose: Point,
    pub left_mouth: Point,
    pub right_mouth: Point,
}

impl LandmarkSet {
    pub fn get(&self, landmark: Landmark) -> Point {
        match landmark {
            Landmark::LeftEye => self.left_eye,
            Landmark::RightEye => self.right_eye,
            Landmark::Nose => self.nose,
            Landmark::LeftMouth => self.left_mouth,
            Landmark::RightMouth => self.right_mouth,
        }
    }

    fn get_mut(&mut self, landmark: Landmark) -> &mut Point {
        match landmark {
            Landmark::LeftEye => &mut self.left_eye,
            Landmark::RightEye => &mut self.right_eye,
            Landmark::Nose => &mut self.nose,
            Landmark::LeftMouth => &mut self.left_mouth,
            Landmark::RightMouth => &mut self.right_mouth,
        }
    }

    pub fn inter_ocular(&self) -> f64 {
        self.left_eye.distance(self.right_eye)
    }

    /// Checks that every point is finite and inside `[0, width-1] x [0, height-1]`.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        for lm in Landmark::ALL {
            let p = self.get(lm);
            if !p.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "landmark {lm:?} is not finite"
                )));
            }
            if p.x < 0.0 || p.y < 0.0 || p.x > (width as f64 - 1.0) || p.y > (height as f64 - 1.0) {
                return Err(Error::InvalidInput(format!(
                    "landmark {lm:?} at ({}, {}) lies outside the {width}x{height} image",
                    p.x, p.y
                )));
            }
        }
        if self.inter_ocular() <= 0.0 {
            return Err(Error::InvalidInput("eye landmarks coincide".into()));
        }
        Ok(())
    }

    /// Clamps points into the image and lists the landmarks that moved.
    pub fn clamped(&self, width: usize, height: usize) -> (LandmarkSet, Vec<Landmark>) {
        let mut out = *self;
        let mut moved = Vec::new();
        let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
        for lm in Landmark::ALL {
            let p = out.get_mut(lm);
            let c = Point::new(p.x.clamp(0.0, w.max(0.0)), p.y.clamp(0.0, h.max(0.0)));
            if c != *p {
                moved.push(lm);
                *p = c;
            }
        }
        (out, moved)
    }
}

/// 2x3 affine map `(x, y) -> (a x + b y + c, d x + e y + f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub m: [[f64; 3]; 2],
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };

    pub fn apply(&self, p: Point) -> Point {
        let [[a, b, c], [d, e, f]] = self.m;
        Point::new(a * p.x + b * p.y + c, d * p.x + e * p.y + f)
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Result<Affine> {
        let det = self.determinant();
        let scale =
            self.m[0][0].abs() + self.m[0][1].abs() + self.m[1][0].abs() + self.m[1][1].abs();
        if det.abs() <= COLLINEARITY_TOLERANCE * scale * scale || !det.is_finite() {
            return Err(Error::DegenerateFit("transform is singular".into()));
        }
        let [[a, b, c], [d, e, f]] = self.m;
        let ia = e / det;
        let ib = -b / det;
        let id = -d / det;
        let ie = a / det;
        Ok(Affine {
            m: [[ia, ib, -(ia * c + ib * f)], [id, ie, -(id * c + ie * f)]],
        })
    }
}

/// Least-squares affine transform taking `anchors` onto `targets`.
///
/// Solved in centered coordinates, so the translation maps the anchor
/// centroid onto the target centroid. The linear part comes from a thin QR
/// factorization of the centered anchors rather than the normal equations,
/// which would square their condition number. Three non-collinear
/// correspondences are interpolated exactly.
pub fn fit_affine(anchors: &[Point], targets: &[Point]) -> Result<Affine> {
    if anchors.len() != targets.len() {
        return Err(Error::InvalidInput(format!(
            "{} anchors but {} targets",
            anchors.len(),
            targets.len()
        )));
    }
    if anchors.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 correspondences, got {}",
            anchors.len()
        )));
    }
    if anchors.iter().chain(targets).any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite correspondence".into()));
    }
    let n = anchors.len() as f64;
    let centroid = |pts: &[Point]| {
        let (sx, sy) = pts
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    };
    let cs = centroid(anchors);
    let ct = centroid(targets);

    let xs: Vec<f64> = anchors.iter().map(|p| p.x - cs.x).collect();
    let ys: Vec<f64> = anchors.iter().map(|p| p.y - cs.y).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    // Modified Gram-Schmidt with one reorthogonalization pass.
    let r11 = dot(&xs, &xs).sqrt();
    if r11 == 0.0 {
        return Err(Error::DegenerateFit("anchor points are collinear".into()));
    }
    let q1: Vec<f64> = xs.iter().map(|v| v / r11).collect();
    let mut r12 = 0.0;
    let mut q2 = ys.clone();
    for _ in 0..2 {
        let c = dot(&q1, &q2);
        r12 += c;
        for (v, q) in q2.iter_mut().zip(&q1) {
            *v -= c * q;
        }
    }
    let r22 = dot(&q2, &q2).sqrt();
    // det(XᵀX) = (r11 r22)², trace(XᵀX) = r11² + r12² + r22².
    let spread = r11 * r11 + r12 * r12 + r22 * r22;
    if (r11 * r22).powi(2) <= COLLINEARITY_TOLERANCE * spread * spread {
        return Err(Error::DegenerateFit("anchor points are collinear".into()));
    }
    for v in &mut q2 {
        *v /= r22;
    }

    // Back substitution of R [p; q] = Qᵀ u for each output coordinate.
    let solve = |u: &[f64]| {
        let q = dot(&q2, u) / r22;
        let p = (dot(&q1, u) - r12 * q) / r11;
        (p, q)
    };
    let tx: Vec<f64> = targets.iter().map(|t| t.x - ct.x).collect();
    let ty: Vec<f64> = targets.iter().map(|t| t.y - ct.y).collect();
    let (a, b) = solve(&tx);
    let (d, e) = solve(&ty);
    Ok(Affine {
        m: [
            [a, b, ct.x - a * cs.x - b * cs.y],
            [d, e, ct.y - d * cs.x - e * cs.y],
        ],
    })
}
