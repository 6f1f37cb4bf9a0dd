//! Fixed-size 2x2 complex matrices and the Lindblad superoperator pieces.
//!
//! Basis convention: index 0 is the excited state `|e>`, index 1 the ground
//! state `|g>`. With this ordering `sigma_z = diag(1, -1)`, `sigma_+ = |e><g|`
//! and `sigma_- = |g><e|`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Row-major 2x2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2 {
    pub m: [[C64; 2]; 2],
}

impl CMat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self {
            m: [[a, b], [c, d]],
        }
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    pub const fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Self::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    /// Raising operator `|e><g|`.
    pub const fn sigma_plus() -> Self {
        Self::new(ZERO, ONE, ZERO, ZERO)
    }

    /// Lowering operator `|g><e|`.
    pub const fn sigma_minus() -> Self {
        Self::new(ZERO, ZERO, ONE, ZERO)
    }

    /// `|e><e|`
    pub const fn excited() -> Self {
        Self::new(ONE, ZERO, ZERO, ZERO)
    }

    /// `|g><g|`
    pub const fn ground() -> Self {
        Self::new(ZERO, ZERO, ZERO, ONE)
    }

    #[inline]
    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(
            m[0][0].conj(),
            m[1][0].conj(),
            m[0][1].conj(),
            m[1][1].conj(),
        )
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    #[inline]
    pub fn scale(&self, s: C64) -> Self {
        let m = &self.m;
        Self::new(s * m[0][0], s * m[0][1], s * m[1][0], s * m[1][1])
    }

    #[inline]
    pub fn scale_re(&self, s: f64) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// `(A + A^dagger) / 2`
    #[inline]
    pub fn hermitize(&self) -> Self {
        let m = &self.m;
        let off = (m[0][1] + m[1][0].conj()) * 0.5;
        Self::new(m[0][0].re.into(), off, off.conj(), m[1][1].re.into())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (*self - self.adjoint()).max_abs() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let h = self.hermitize();
        let a = h.m[0][0].re;
        let d = h.m[1][1].re;
        let b = h.m[0][1].norm();
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - radius, mean + radius]
    }
}

impl Add for CMat2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl AddAssign for CMat2 {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for CMat2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(
            a[0][0] - b[0][0],
            a[0][1] - b[0][1],
            a[1][0] - b[1][0],
            a[1][1] - b[1][1],
        )
    }
}

impl Neg for CMat2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for CMat2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<CMat2> for C64 {
    type Output = CMat2;
    #[inline]
    fn mul(self, m: CMat2) -> CMat2 {
        m.scale(self)
    }
}

impl Mul<CMat2> for f64 {
    type Output = CMat2;
    #[inline]
    fn mul(self, m: CMat2) -> CMat2 {
        m.scale_re(self)
    }
}

/// `AB - BA`
#[inline]
pub fn commutator(a: CMat2, b: CMat2) -> CMat2 {
    a * b - b * a
}

/// `AB + BA`
#[inline]
pub fn anticommutator(a: CMat2, b: CMat2) -> CMat2 {
    a * b + b * a
}

/// Lindblad dissipator `A rho A^dagger - {A^dagger A, rho} / 2`.
#[inline]
pub fn dissipator(a: CMat2, rho: CMat2) -> CMat2 {
    let ad = a.adjoint();
    a * rho * ad - 0.5 * anticommutator(ad * a, rho)
}

/// Heisenberg-picture dual of [`dissipator`]: `A^dagger E A - {A^dagger A, E} / 2`.
#[inline]
pub fn adjoint_dissipator(a: CMat2, e: CMat2) -> CMat2 {
    let ad = a.adjoint();
    ad * e * a - 0.5 * anticommutator(ad * a, e)
}

/// `Tr(A B)`
#[inline]
pub fn trace_product(a: &CMat2, b: &CMat2) -> C64 {
    a.m[0][0] * b.m[0][0] + a.m[0][1] * b.m[1][0] + a.m[1][0] * b.m[0][1] + a.m[1][1] * b.m[1][1]
}

/// A Hermitian 2x2 matrix stored by its four real parameters
/// `[h_ee, h_gg, Re h_eg, Im h_eg]`.
///
/// The block estimators keep their states in this form so Hermiticity holds
/// by construction and a block update is a single real 4x4 mat-vec.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Herm2(pub [f64; 4]);

impl Herm2 {
    pub const fn zero() -> Self {
        Self([0.0; 4])
    }

    pub const fn identity() -> Self {
        Self([1.0, 1.0, 0.0, 0.0])
    }

    /// Maximally mixed state `I/2`.
    pub const fn mixed() -> Self {
        Self([0.5, 0.5, 0.0, 0.0])
    }

    /// Projects onto the Hermitian part of `m`.
    pub fn from_cmat(m: &CMat2) -> Self {
        let off = (m.m[0][1] + m.m[1][0].conj()) * 0.5;
        Self([m.m[0][0].re, m.m[1][1].re, off.re, off.im])
    }

    pub fn to_cmat(self) -> CMat2 {
        let [a, d, re, im] = self.0;
        CMat2::new(a.into(), C64::new(re, im), C64::new(re, -im), d.into())
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1]
    }

    /// `Tr(self * other)`, real for Hermitian arguments.
    #[inline]
    pub fn trace_product(&self, other: &Herm2) -> f64 {
        let (a, b) = (&self.0, &other.0);
        a[0] * b[0] + a[1] * b[1] + 2.0 * (a[2] * b[2] + a[3] * b[3])
    }

    #[inline]
    pub fn scale(&mut self, s: f64) {
        for x in &mut self.0 {
            *x *= s;
        }
    }

    #[inline]
    pub fn add_scaled(&mut self, s: f64, other: &Herm2) {
        for (x, y) in self.0.iter_mut().zip(other.0.iter()) {
            *x += s * y;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let [a, d, re, im] = self.0;
        0.5 * (a + d) - (0.25 * (a - d) * (a - d) + re * re + im * im).sqrt()
    }
}

/// Real 4x4 matrix of a Hermiticity-preserving linear map on 2x2 matrices,
/// acting on [`Herm2`] parameter vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superop(pub [[f64; 4]; 4]);

impl Superop {
    pub const fn zero() -> Self {
        Self([[0.0; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut s = Self::zero();
        for (k, row) in s.0.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        s
    }

    /// Tabulates `f` on the Hermitian basis. `f` must map Hermitian matrices
    /// to Hermitian matrices; any anti-Hermitian residue is discarded.
    pub fn from_map<F: Fn(CMat2) -> CMat2>(f: F) -> Self {
        let basis = [
            Herm2([1.0, 0.0, 0.0, 0.0]),
            Herm2([0.0, 1.0, 0.0, 0.0]),
            Herm2([0.0, 0.0, 1.0, 0.0]),
            Herm2([0.0, 0.0, 0.0, 1.0]),
        ];
        let mut s = Self::zero();
        for (col, b) in basis.iter().enumerate() {
            let image = Herm2::from_cmat(&f(b.to_cmat()));
            for row in 0..4 {
                s.0[row][col] = image.0[row];
            }
        }
        s
    }

    #[inline]
    pub fn apply(&self, v: &Herm2) -> Herm2 {
        let m = &self.0;
        let x = &v.0;
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(m.iter()) {
            *o = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + row[3] * x[3];
        }
        Herm2(out)
    }

    /// `self + s * other`
    #[inline]
    pub fn plus_scaled(&self, s: f64, other: &Superop) -> Superop {
        let mut out = *self;
        for (ro, ri) in out.0.iter_mut().zip(other.0.iter()) {
            for (a, b) in ro.iter_mut().zip(ri.iter()) {
                *a += s * b;
            }
        }
        out
    }
}
