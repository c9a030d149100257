//! The HSL sample space: integer colors, canonicalization and RGB conversion.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// Number of distinct integer hues (0..=359).
pub const HUE_LEVELS: usize = 360;
/// Number of distinct integer saturation or lightness values (0..=100).
pub const PERCENT_LEVELS: usize = 101;

/// One of the three HSL coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Hue,
    Saturation,
    Lightness,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Hue, Dimension::Saturation, Dimension::Lightness];

    pub fn index(self) -> usize {
        match self {
            Dimension::Hue => 0,
            Dimension::Saturation => 1,
            Dimension::Lightness => 2,
        }
    }

    /// Number of integer values the dimension can take.
    pub fn levels(self) -> usize {
        match self {
            Dimension::Hue => HUE_LEVELS,
            _ => PERCENT_LEVELS,
        }
    }

    /// Wraps (hue) or clamps (saturation, lightness) an integer into range.
    pub fn canonical_value(self, value: i64) -> u16 {
        match self {
            Dimension::Hue => value.rem_euclid(HUE_LEVELS as i64) as u16,
            _ => value.clamp(0, 100) as u16,
        }
    }

    /// The two other dimensions, in H, S, L order.
    pub fn others(self) -> [Dimension; 2] {
        match self {
            Dimension::Hue => [Dimension::Saturation, Dimension::Lightness],
            Dimension::Saturation => [Dimension::Hue, Dimension::Lightness],
            Dimension::Lightness => [Dimension::Hue, Dimension::Saturation],
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Hue => "hue",
            Dimension::Saturation => "saturation",
            Dimension::Lightness => "lightness",
        })
    }
}

/// An integer point of the hue/saturation/lightness cube.
///
/// Hue is in degrees `0..=359`, saturation and lightness in percent `0..=100`.
/// Construct through [`HslColor::new`] or [`canonicalize`] so the ranges hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[i64; 3]", into = "[u16; 3]")]
pub struct HslColor {
    h: u16,
    s: u16,
    l: u16,
}

impl HslColor {
    pub fn new(h: u16, s: u16, l: u16) -> Result<Self, DomainError> {
        if h as usize >= HUE_LEVELS || s > 100 || l > 100 {
            return Err(DomainError::OutOfRange { h: h.into(), s: s.into(), l: l.into() });
        }
        Ok(Self { h, s, l })
    }

    pub fn h(self) -> u16 {
        self.h
    }

    pub fn s(self) -> u16 {
        self.s
    }

    pub fn l(self) -> u16 {
        self.l
    }

    pub fn get(self, dim: Dimension) -> u16 {
        match dim {
            Dimension::Hue => self.h,
            Dimension::Saturation => self.s,
            Dimension::Lightness => self.l,
        }
    }

    /// Replaces one coordinate, wrapping or clamping the new value into range.
    pub fn with(self, dim: Dimension, value: i64) -> Self {
        let v = dim.canonical_value(value);
        let mut out = self;
        match dim {
            Dimension::Hue => out.h = v,
            Dimension::Saturation => out.s = v,
            Dimension::Lightness => out.l = v,
        }
        out
    }

    pub fn to_array(self) -> [u16; 3] {
        [self.h, self.s, self.l]
    }

    pub fn as_reals(self) -> [f64; 3] {
        [self.h as f64, self.s as f64, self.l as f64]
    }

    /// Position in the full integer lattice, hue-major.
    pub fn lattice_index(self) -> usize {
        (self.h as usize * PERCENT_LEVELS + self.s as usize) * PERCENT_LEVELS + self.l as usize
    }

    pub fn from_lattice_index(idx: usize) -> Self {
        let l = idx % PERCENT_LEVELS;
        let s = (idx / PERCENT_LEVELS) % PERCENT_LEVELS;
        let h = idx / (PERCENT_LEVELS * PERCENT_LEVELS);
        Self { h: h as u16, s: s as u16, l: l as u16 }
    }
}

impl TryFrom<[i64; 3]> for HslColor {
    type Error = DomainError;

    fn try_from(v: [i64; 3]) -> Result<Self, Self::Error> {
        if !(0..HUE_LEVELS as i64).contains(&v[0])
            || !(0..=100).contains(&v[1])
            || !(0..=100).contains(&v[2])
        {
            return Err(DomainError::OutOfRange { h: v[0], s: v[1], l: v[2] });
        }
        Ok(Self { h: v[0] as u16, s: v[1] as u16, l: v[2] as u16 })
    }
}

impl From<HslColor> for [u16; 3] {
    fn from(c: HslColor) -> Self {
        c.to_array()
    }
}

impl fmt::Display for HslColor {
    /// Renders as `[h, s, l]`, the code format used in prompts.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.h, self.s, self.l)
    }
}

/// Total number of integer lattice points.
pub const LATTICE_SIZE: usize = HUE_LEVELS * PERCENT_LEVELS * PERCENT_LEVELS;

/// Maps arbitrary real coordinates onto the lattice.
///
/// Each coordinate is rounded half away from zero, then hue wraps modulo 360
/// and saturation/lightness clamp to `[0, 100]`.
pub fn canonicalize(h: f64, s: f64, l: f64) -> Result<HslColor, DomainError> {
    if !(h.is_finite() && s.is_finite() && l.is_finite()) {
        return Err(DomainError::InvalidCoordinate { h, s, l });
    }
    // f64::round is half-away-from-zero; clamp before the cast so huge values stay finite.
    let hue = h.round().rem_euclid(HUE_LEVELS as f64) as u16 % HUE_LEVELS as u16;
    let sat = s.round().clamp(0.0, 100.0) as u16;
    let light = l.round().clamp(0.0, 100.0) as u16;
    Ok(HslColor { h: hue, s: sat, l: light })
}

/// CSS-style HSL to 8-bit RGB conversion.
pub fn hsl_to_rgb(c: HslColor) -> (u8, u8, u8) {
    let s = c.s as f64 / 100.0;
    let l = c.l as f64 / 100.0;
    let chroma = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let sector = c.h as f64 / 60.0;
    let x = chroma * (1.0 - (sector % 2.0 - 1.0).abs());
    let (r, g, b) = match c.h / 60 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = l - chroma / 2.0;
    let to_byte = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to_byte(r), to_byte(g), to_byte(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hsl(h: u16, s: u16, l: u16) -> HslColor {
        HslColor::new(h, s, l).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(370.0, 50.0, 50.0).unwrap(), hsl(10, 50, 50));
        assert_eq!(canonicalize(-20.0, 150.0, -5.0).unwrap(), hsl(340, 100, 0));
        assert_eq!(canonicalize(120.5, 33.3, 66.6).unwrap(), hsl(121, 33, 67));
    }

    #[test]
    fn canonicalize_edges() {
        assert_eq!(canonicalize(359.6, 0.0, 0.0).unwrap().h(), 0);
        assert_eq!(canonicalize(-0.5, 0.0, 0.0).unwrap().h(), 359);
        assert_eq!(canonicalize(720.0, 0.0, 0.0).unwrap().h(), 0);
        assert_eq!(canonicalize(1e300, -1e300, 1e300).unwrap(), canonicalize(1e300, 0.0, 100.0).unwrap());
    }

    #[test]
    fn canonicalize_rejects_non_finite() {
        assert!(matches!(
            canonicalize(f64::NAN, 0.0, 0.0),
            Err(DomainError::InvalidCoordinate { .. })
        ));
        assert!(canonicalize(0.0, f64::INFINITY, 0.0).is_err());
        assert!(canonicalize(0.0, 0.0, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn new_validates_ranges() {
        assert!(HslColor::new(360, 0, 0).is_err());
        assert!(HslColor::new(0, 101, 0).is_err());
        assert!(HslColor::new(359, 100, 100).is_ok());
    }

    #[test]
    fn rgb_examples() {
        assert_eq!(hsl_to_rgb(hsl(0, 100, 50)), (255, 0, 0));
        assert_eq!(hsl_to_rgb(hsl(120, 100, 50)), (0, 255, 0));
        assert_eq!(hsl_to_rgb(hsl(240, 100, 50)), (0, 0, 255));
        assert_eq!(hsl_to_rgb(hsl(0, 0, 100)), (255, 255, 255));
        assert_eq!(hsl_to_rgb(hsl(0, 0, 0)), (0, 0, 0));
        assert_eq!(hsl_to_rgb(hsl(60, 100, 50)), (255, 255, 0));
    }

    #[test]
    fn serde_uses_triples() {
        let c = hsl(300, 97, 48);
        assert_eq!(serde_json::to_string(&c).unwrap(), "[300,97,48]");
        assert_eq!(serde_json::from_str::<HslColor>("[300,97,48]").unwrap(), c);
        assert!(serde_json::from_str::<HslColor>("[360,0,0]").is_err());
    }

    #[test]
    fn lattice_index_round_trips_corners() {
        for c in [hsl(0, 0, 0), hsl(359, 100, 100), hsl(17, 3, 99)] {
            assert_eq!(HslColor::from_lattice_index(c.lattice_index()), c);
        }
        assert_eq!(hsl(359, 100, 100).lattice_index(), LATTICE_SIZE - 1);
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(h in -1e6f64..1e6, s in -1e3f64..1e3, l in -1e3f64..1e3) {
            let c = canonicalize(h, s, l).unwrap();
            let [a, b, d] = c.as_reals();
            prop_assert_eq!(canonicalize(a, b, d).unwrap(), c);
            prop_assert!(c.h() <= 359 && c.s() <= 100 && c.l() <= 100);
        }

        #[test]
        fn achromatic_axis_is_gray(h in 0u16..360, l in 0u16..=100) {
            let (r, g, b) = hsl_to_rgb(hsl(h, 0, l));
            prop_assert!(r == g && g == b);
        }
    }
}
