//! Spin angles on a fixed-point circle.
//!
//! An [`Angle`] stores `raw` with angle `raw * pi / 2^63`, so wrapping `i64`
//! arithmetic is arithmetic modulo `2 pi`. Raw values are kept on a grid of
//! `2^50` steps per turn. This makes the component reflections used by the
//! plaquette flips exact, involutive and commuting, and lets an angle
//! survive a round trip through its shortest decimal `f64` representation.

use core::f64::consts::PI;

/// Raw values are multiples of this quantum (2^14), giving 2^50 steps per turn.
const QUANTUM_BITS: u32 = 14;
const HALF_TURN: i64 = i64::MIN;
const QUARTER_TURN: i64 = 1 << 62;
const RAD_PER_RAW: f64 = PI / 9_223_372_036_854_775_808.0;
const RAW_PER_RAD: f64 = 9_223_372_036_854_775_808.0 / PI;

/// Angle of an O(2) spin, `(cos, sin) = (S^x, S^z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Angle(i64);

impl Angle {
    pub const ZERO: Angle = Angle(0);
    pub const QUARTER: Angle = Angle(QUARTER_TURN);
    pub const HALF: Angle = Angle(HALF_TURN);

    /// Nearest grid angle to `radians` (any real, reduced mod 2 pi).
    pub fn from_radians(radians: f64) -> Self {
        let turns = libm::remainder(radians, 2.0 * PI);
        let steps = libm::round(turns * RAW_PER_RAD / (1u64 << QUANTUM_BITS) as f64) as i64;
        Angle(steps.wrapping_shl(QUANTUM_BITS))
    }

    /// Angle of the vector `(x, z)`.
    pub fn from_vector(x: f64, z: f64) -> Self {
        Self::from_radians(libm::atan2(z, x))
    }

    /// Builds an angle from a raw grid value; the low 14 bits are cleared.
    pub fn from_raw(raw: i64) -> Self {
        Angle(raw & !((1i64 << QUANTUM_BITS) - 1))
    }

    /// `steps` grid quanta (2^50 per turn).
    pub fn from_steps(steps: i64) -> Self {
        Angle(steps.wrapping_shl(QUANTUM_BITS))
    }

    #[inline]
    pub fn raw(self) -> i64 {
        self.0
    }

    /// Value in `(-pi, pi]`.
    pub fn radians(self) -> f64 {
        if self.0 == HALF_TURN {
            PI
        } else {
            self.0 as f64 * RAD_PER_RAW
        }
    }

    #[inline]
    pub fn wrapping_add(self, other: Angle) -> Angle {
        Angle(self.0.wrapping_add(other.0))
    }

    /// `theta -> -theta`: negates the z-component.
    #[inline]
    pub fn reflect_z(self) -> Angle {
        Angle(self.0.wrapping_neg())
    }

    /// `theta -> pi - theta`: negates the x-component.
    #[inline]
    pub fn reflect_x(self) -> Angle {
        Angle(HALF_TURN.wrapping_sub(self.0))
    }

    /// `(cos, sin)` with `reflect_x` and `reflect_z` mapping to exact sign
    /// changes of the corresponding component.
    pub fn cos_sin(self) -> (f64, f64) {
        let raw = self.0;
        if raw == HALF_TURN {
            return (-1.0, 0.0);
        }
        let (c, s) = first_half_cos_sin(raw.unsigned_abs() as i64);
        if raw < 0 {
            (c, -s)
        } else {
            (c, s)
        }
    }
}

// cos/sin for raw in [0, 2^63), folded onto [0, pi/2] so that
// raw and 2^63 - raw give (c, s) and (-c, s) bit for bit
fn first_half_cos_sin(raw: i64) -> (f64, f64) {
    if raw == QUARTER_TURN {
        return (0.0, 1.0);
    }
    if raw > QUARTER_TURN {
        let folded = (1u64 << 63) - raw as u64;
        let t = folded as f64 * RAD_PER_RAW;
        (-libm::cos(t), libm::sin(t))
    } else {
        let t = raw as f64 * RAD_PER_RAW;
        (libm::cos(t), libm::sin(t))
    }
}
