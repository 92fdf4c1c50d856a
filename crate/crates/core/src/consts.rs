//! Physical constants (SI).

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Vacuum permeability, H/m (CODATA 2018).
pub const MU0: f64 = 1.256_637_062_12e-6;

/// Vacuum permittivity, F/m, tied to `C` and `MU0`.
pub const EPS0: f64 = 1.0 / (MU0 * C * C);

/// Free-space wave impedance sqrt(mu0 / eps0), about 376.73 ohm.
pub fn eta0() -> f64 {
    (MU0 / EPS0).sqrt()
}
