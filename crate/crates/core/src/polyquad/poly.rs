//! Bivariate polynomials in scaled local coordinates with exact calculus.
//!
//! A polynomial lives on a [`Frame`]: `xi = (x - x0) / s`, `eta = (y - y0) / s`.
//! Coefficients are stored over graded monomials `xi^a eta^b`, ordered by total
//! degree and then by increasing power of `eta`.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: [f64; 2],
    pub scale: f64,
}

impl Frame {
    pub const UNIT: Frame = Frame {
        origin: [0.0, 0.0],
        scale: 1.0,
    };

    pub fn new(origin: [f64; 2], scale: f64) -> Self {
        assert!(scale > 0.0, "frame scale must be positive");
        Self { origin, scale }
    }

    #[inline]
    pub fn local(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.origin[0]) / self.scale,
            (p[1] - self.origin[1]) / self.scale,
        ]
    }
}

/// Number of monomials of total degree at most `degree`.
#[inline]
pub const fn dim_p(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Index of `xi^a eta^b` in the graded ordering.
#[inline]
pub const fn mono_index(a: usize, b: usize) -> usize {
    let t = a + b;
    t * (t + 1) / 2 + b
}

/// Exponents of every monomial up to `degree`, in storage order.
pub fn exponents(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_p(degree));
    for t in 0..=degree {
        for b in 0..=t {
            out.push((t - b, b));
        }
    }
    out
}

/// Values of all monomials up to `degree` at a local point.
pub fn monomials_at(degree: usize, local: [f64; 2], out: &mut Vec<f64>) {
    out.clear();
    out.reserve(dim_p(degree));
    let mut xp = vec![1.0; degree + 1];
    let mut yp = vec![1.0; degree + 1];
    for i in 1..=degree {
        xp[i] = xp[i - 1] * local[0];
        yp[i] = yp[i - 1] * local[1];
    }
    for t in 0..=degree {
        for b in 0..=t {
            out.push(xp[t - b] * yp[b]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub frame: Frame,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl Poly2 {
    pub fn zero(frame: Frame, degree: usize) -> Self {
        Self {
            frame,
            degree,
            coeffs: vec![0.0; dim_p(degree)],
        }
    }

    pub fn from_coeffs(frame: Frame, degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), dim_p(degree));
        Self {
            frame,
            degree,
            coeffs,
        }
    }

    /// Single monomial `xi^a eta^b`.
    pub fn monomial(frame: Frame, a: usize, b: usize) -> Self {
        let mut p = Self::zero(frame, a + b);
        p.coeffs[mono_index(a, b)] = 1.0;
        p
    }

    pub fn constant(frame: Frame, c: f64) -> Self {
        Self::from_coeffs(frame, 0, vec![c])
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let l = self.frame.local(p);
        self.eval_local(l)
    }

    pub fn eval_local(&self, l: [f64; 2]) -> f64 {
        let n = self.degree + 1;
        let mut xp = [1.0; 16];
        let mut yp = [1.0; 16];
        assert!(n <= 16, "degree too large for direct evaluation");
        for i in 1..n {
            xp[i] = xp[i - 1] * l[0];
            yp[i] = yp[i - 1] * l[1];
        }
        let mut acc = 0.0;
        for t in 0..n {
            let base = t * (t + 1) / 2;
            for b in 0..=t {
                acc += self.coeffs[base + b] * xp[t - b] * yp[b];
            }
        }
        acc
    }

    /// Partial derivative with respect to physical `x`.
    pub fn dx(&self) -> Self {
        if self.degree == 0 {
            return Self::zero(self.frame, 0);
        }
        let mut out = Self::zero(self.frame, self.degree - 1);
        let inv = 1.0 / self.frame.scale;
        for t in 1..=self.degree {
            for b in 0..t {
                let a = t - b;
                out.coeffs[mono_index(a - 1, b)] += a as f64 * inv * self.coeffs[mono_index(a, b)];
            }
        }
        out
    }

    /// Partial derivative with respect to physical `y`.
    pub fn dy(&self) -> Self {
        if self.degree == 0 {
            return Self::zero(self.frame, 0);
        }
        let mut out = Self::zero(self.frame, self.degree - 1);
        let inv = 1.0 / self.frame.scale;
        for t in 1..=self.degree {
            for b in 1..=t {
                let a = t - b;
                out.coeffs[mono_index(a, b - 1)] += b as f64 * inv * self.coeffs[mono_index(a, b)];
            }
        }
        out
    }

    /// Mixed partial derivative d^a/dx^a d^b/dy^b.
    pub fn derivative(&self, a: usize, b: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..a {
            p = p.dx();
        }
        for _ in 0..b {
            p = p.dy();
        }
        p
    }

    pub fn laplacian(&self) -> Self {
        &self.dx().dx() + &self.dy().dy()
    }

    /// Scalar rot: `(d/dy, -d/dx)`.
    pub fn rot(&self) -> VecPoly {
        VecPoly {
            x: self.dy(),
            y: self.dx().scaled(-1.0),
        }
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.coeffs.iter_mut().for_each(|v| *v *= c);
        self
    }

    /// Same polynomial stored with a larger nominal degree.
    pub fn lifted(&self, degree: usize) -> Self {
        assert!(degree >= self.degree);
        let mut c = self.coeffs.clone();
        c.resize(dim_p(degree), 0.0);
        Self::from_coeffs(self.frame, degree, c)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Actual degree, ignoring trailing coefficients below `tol`.
    pub fn effective_degree(&self, tol: f64) -> usize {
        let mut deg = 0;
        for t in 0..=self.degree {
            let base = t * (t + 1) / 2;
            if self.coeffs[base..=base + t].iter().any(|c| c.abs() > tol) {
                deg = t;
            }
        }
        deg
    }
}

impl Add for &Poly2 {
    type Output = Poly2;
    fn add(self, rhs: &Poly2) -> Poly2 {
        debug_assert_eq!(self.frame, rhs.frame);
        let deg = self.degree.max(rhs.degree);
        let mut c = vec![0.0; dim_p(deg)];
        for (i, v) in self.coeffs.iter().enumerate() {
            c[i] += v;
        }
        for (i, v) in rhs.coeffs.iter().enumerate() {
            c[i] += v;
        }
        Poly2::from_coeffs(self.frame, deg, c)
    }
}

impl Sub for &Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: &Poly2) -> Poly2 {
        self + &rhs.clone().scaled(-1.0)
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: &Poly2) -> Poly2 {
        debug_assert_eq!(self.frame, rhs.frame);
        let deg = self.degree + rhs.degree;
        let mut out = Poly2::zero(self.frame, deg);
        let ea = exponents(self.degree);
        let eb = exponents(rhs.degree);
        for (i, &(a1, b1)) in ea.iter().enumerate() {
            let ci = self.coeffs[i];
            if ci == 0.0 {
                continue;
            }
            for (j, &(a2, b2)) in eb.iter().enumerate() {
                out.coeffs[mono_index(a1 + a2, b1 + b2)] += ci * rhs.coeffs[j];
            }
        }
        out
    }
}

/// A 2-vector of polynomials sharing one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VecPoly {
    pub x: Poly2,
    pub y: Poly2,
}

impl VecPoly {
    pub fn new(x: Poly2, y: Poly2) -> Self {
        Self { x, y }
    }

    pub fn zero(frame: Frame, degree: usize) -> Self {
        Self::new(Poly2::zero(frame, degree), Poly2::zero(frame, degree))
    }

    pub fn frame(&self) -> Frame {
        self.x.frame
    }

    pub fn degree(&self) -> usize {
        self.x.degree.max(self.y.degree)
    }

    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        [self.x.eval(p), self.y.eval(p)]
    }

    /// Scalar curl `d u2/dx - d u1/dy`.
    pub fn curl(&self) -> Poly2 {
        &self.y.dx() - &self.x.dy()
    }

    pub fn div(&self) -> Poly2 {
        &self.x.dx() + &self.y.dy()
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::new(self.x.scaled(c), self.y.scaled(c))
    }

    pub fn axpy(&mut self, c: f64, other: &VecPoly) {
        let deg = self.degree().max(other.degree());
        if self.x.degree < deg {
            self.x = self.x.lifted(deg);
        }
        if self.y.degree < deg {
            self.y = self.y.lifted(deg);
        }
        for (a, b) in self.x.coeffs.iter_mut().zip(&other.x.coeffs) {
            *a += c * b;
        }
        for (a, b) in self.y.coeffs.iter_mut().zip(&other.y.coeffs) {
            *a += c * b;
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.x.max_abs_coeff().max(self.y.max_abs_coeff())
    }
}

impl Add for &VecPoly {
    type Output = VecPoly;
    fn add(self, rhs: &VecPoly) -> VecPoly {
        VecPoly::new(&self.x + &rhs.x, &self.y + &rhs.y)
    }
}

impl Sub for &VecPoly {
    type Output = VecPoly;
    fn sub(self, rhs: &VecPoly) -> VecPoly {
        VecPoly::new(&self.x - &rhs.x, &self.y - &rhs.y)
    }
}
