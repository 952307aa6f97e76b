//! Numerical kernels: special functions, adaptive quadrature, root finding.

pub mod quad;
pub mod roots;
pub mod special;

pub use quad::{integrate, QuadratureResult, Support};
pub use roots::{solve_2d, solve_scalar, RootResult, Solve2dOptions, Solve2dResult};
pub use special::{
    exp_integral_e1, exp_integral_e1_scaled, exp_integral_e1_scaled_ln_arg, lambert_w,
    wright_omega, wright_omega_ln, LambertBranch, EULER_GAMMA,
};

/// Default absolute tolerance for quadrature.
pub const QUAD_TOL: f64 = 1e-9;
/// Default residual tolerance for scalar root solves.
pub const SCALAR_TOL: f64 = 1e-10;
/// Default residual-norm tolerance for 2-D system solves.
pub const SYSTEM_TOL: f64 = 1e-8;

#[cfg(test)]
pub(crate) mod test_support {
    /// Minimal xorshift64* generator for deterministic property-style tests.
    pub struct XorShift {
        state: u64,
    }

    impl XorShift {
        pub fn new(seed: u64) -> Self {
            XorShift { state: seed.max(1) }
        }

        pub fn next_u64(&mut self) -> u64 {
            let mut x = self.state;
            x ^= x >> 12;
            x ^= x << 25;
            x ^= x >> 27;
            self.state = x;
            x.wrapping_mul(0x2545_f491_4f6c_dd1d)
        }

        /// Uniform sample in `[0, 1)`.
        pub fn uniform(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
        }
    }

    #[track_caller]
    pub fn assert_close(got: f64, want: f64, tol: f64) {
        let scale = want.abs().max(1.0);
        assert!(
            (got - want).abs() <= tol * scale,
            "got {got:.17e}, want {want:.17e} (tol {tol:.1e}, diff {:.3e})",
            (got - want).abs()
        );
    }
}
