//! Orbit generators for statistical estimators.
//!
//! Smooth systems iterate their map in f64 directly. The doubling map cannot:
//! multiplication by two is an exact left shift, so every f64 orbit lands on
//! the fixed point 0 within 53 steps and has no long-run statistics at all.
//! Estimators therefore run doubling orbits as a sliding window over an
//! unbounded bit stream: sampled members take their bits from the member's
//! random stream (a uniform sample of the circle IS an i.i.d. bit stream),
//! and explicit centers are extended past their 53 stored bits by a stream
//! keyed to the center's bit pattern, deterministically. The exact-arithmetic
//! map remains available through `dynamics::iterate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{sample_unchecked, step, PhasePoint, SystemSpec};

/// ChaCha stream id reserved for center-tail bit generators.
const TAIL_STREAM: u64 = u64::MAX - 0x7ea1;

const HEAD_SCALE: f64 = 9007199254740992.0; // 2^53
const FULL_SCALE: f64 = 18446744073709551616.0; // 2^64

enum State {
    /// Direct map iteration on the phase point.
    Point(PhasePoint),
    /// 64-bit fixed-point window sliding over a bit stream (doubling only).
    Bits { window: u64, buffer: u64, left: u8 },
}

pub(crate) struct Orbit {
    spec: SystemSpec,
    rng: ChaCha8Rng,
    state: State,
}

fn window_to_point(window: u64) -> PhasePoint {
    PhasePoint::Circle {
        x: (window >> 11) as f64 / HEAD_SCALE,
    }
}

/// Head of the binary expansion: floor(x * 2^64), exact since the scale is a
/// power of two. The window orbit therefore starts within 2^-64 of x.
fn point_to_window(x: f64) -> u64 {
    (x * FULL_SCALE) as u64
}

impl Orbit {
    /// Orbit of a fresh invariant-measure sample; the generator is kept for
    /// tail bits and for resampling.
    pub fn sampled(spec: &SystemSpec, mut rng: ChaCha8Rng, burn_in: u32) -> Self {
        let state = match spec {
            SystemSpec::Doubling => State::Bits {
                window: rng.random(),
                buffer: 0,
                left: 0,
            },
            _ => State::Point(sample_unchecked(spec, &mut rng, burn_in)),
        };
        Self {
            spec: *spec,
            rng,
            state,
        }
    }

    /// Orbit of a given point. For the doubling map the 53 stored bits are
    /// extended by a stream keyed to the bit pattern, so the orbit behaves
    /// like a generic real in the point's 2^-53 neighborhood and identical
    /// centers reproduce identical orbits.
    pub fn from_center(spec: &SystemSpec, p: &PhasePoint) -> Self {
        match (spec, p) {
            (SystemSpec::Doubling, PhasePoint::Circle { x }) => {
                let mut rng = ChaCha8Rng::seed_from_u64(x.to_bits());
                rng.set_stream(TAIL_STREAM);
                Self {
                    spec: *spec,
                    rng,
                    state: State::Bits {
                        window: point_to_window(*x),
                        buffer: 0,
                        left: 0,
                    },
                }
            }
            _ => Self {
                spec: *spec,
                rng: ChaCha8Rng::seed_from_u64(0),
                state: State::Point(*p),
            },
        }
    }

    /// Throw away the current state and draw a fresh sample from the orbit's
    /// own generator.
    pub fn resample(&mut self, burn_in: u32) {
        self.state = match self.spec {
            SystemSpec::Doubling => State::Bits {
                window: self.rng.random(),
                buffer: 0,
                left: 0,
            },
            _ => State::Point(sample_unchecked(&self.spec, &mut self.rng, burn_in)),
        };
    }

    pub fn position(&self) -> PhasePoint {
        match &self.state {
            State::Point(p) => *p,
            State::Bits { window, .. } => window_to_point(*window),
        }
    }

    /// One map application; returns the new position.
    #[inline]
    pub fn advance(&mut self) -> PhasePoint {
        match &mut self.state {
            State::Point(p) => {
                *p = step(&self.spec, *p);
                *p
            }
            State::Bits {
                window,
                buffer,
                left,
            } => {
                if *left == 0 {
                    *buffer = self.rng.random();
                    *left = 64;
                }
                let bit = *buffer >> 63;
                *buffer <<= 1;
                *left -= 1;
                *window = (*window << 1) | bit;
                window_to_point(*window)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::dist_unchecked;
    use crate::rng::RngStream;

    #[test]
    fn doubling_window_round_trip() {
        // the window starts within 2^-53 of the center
        for x in [0.0, 0.25, 1.0 / 3.0, 0.77, 0.999999] {
            let spec = SystemSpec::doubling();
            let orbit = Orbit::from_center(&spec, &PhasePoint::circle(x));
            match orbit.position() {
                PhasePoint::Circle { x: got } => {
                    assert!((got - x).abs() <= 1.2e-16, "{got} vs {x}")
                }
                _ => panic!("wrong space"),
            }
        }
    }

    #[test]
    fn doubling_orbit_tracks_exact_map_for_first_steps() {
        // the 2^-64 window offset doubles each step; stays under 1e-9 for 20
        let spec = SystemSpec::doubling();
        let x0 = 0.3712345;
        let mut orbit = Orbit::from_center(&spec, &PhasePoint::circle(x0));
        let mut exact = PhasePoint::circle(x0);
        for _ in 0..20 {
            let a = orbit.advance();
            exact = crate::dynamics::iterate(&spec, &exact, 1).unwrap();
            assert!(dist_unchecked(&spec, &a, &exact) < 1e-9);
        }
    }

    #[test]
    fn doubling_orbit_survives_past_53_steps() {
        let spec = SystemSpec::doubling();
        let mut orbit = Orbit::sampled(&spec, RngStream::new(77, 0).rng(), 0);
        let mut nonzero = 0;
        for _ in 0..10_000 {
            if let PhasePoint::Circle { x } = orbit.advance() {
                if x > 1e-6 {
                    nonzero += 1;
                }
            }
        }
        assert!(nonzero > 9_900, "orbit collapsed: {nonzero}");
    }

    #[test]
    fn center_orbits_are_reproducible() {
        let spec = SystemSpec::doubling();
        let p = PhasePoint::circle(0.777);
        let run = |()| {
            let mut orbit = Orbit::from_center(&spec, &p);
            (0..200).map(|_| orbit.advance()).collect::<Vec<_>>()
        };
        assert_eq!(run(()), run(()));
    }

    #[test]
    fn smooth_systems_use_the_exact_map() {
        let spec = SystemSpec::lsv(0.5).unwrap();
        let p = PhasePoint::circle(0.3);
        let mut orbit = Orbit::from_center(&spec, &p);
        let direct = crate::dynamics::iterate(&spec, &p, 25).unwrap();
        let mut through = p;
        for _ in 0..25 {
            through = orbit.advance();
        }
        assert_eq!(through, direct);
    }
}
