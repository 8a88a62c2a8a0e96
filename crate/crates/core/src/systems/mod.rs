//! Concrete map evaluations: doubling baseline, intermittent interval map,
//! intermittent solenoid, stadium billiard.

mod lsv;
mod solenoid;
mod stadium;

pub use lsv::{lsv_map, lsv_sup_deriv};
pub use solenoid::{solenoid_iterate_closed_form, solenoid_map};
pub use stadium::{perimeter, stadium_boundary_point, stadium_map, BoundaryPoint, SegmentKind};

pub(crate) use lsv::{check_gamma, lsv_step};
pub(crate) use solenoid::solenoid_step;

/// Doubling map on the circle. Exact in binary arithmetic: multiplying by two
/// and subtracting one never rounds, so iteration is bit-reproducible.
#[inline]
pub(crate) fn doubling_step(x: f64) -> f64 {
    let y = 2.0 * x;
    if y >= 1.0 {
        y - 1.0
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_is_exact() {
        let mut x = 0.3;
        x = doubling_step(x);
        x = doubling_step(x);
        assert_eq!(x, 0.3 * 4.0 - 1.0); // 0.2 up to the representation of 0.3
        let third = 1.0 / 3.0;
        let two_thirds = doubling_step(third);
        assert_eq!(doubling_step(two_thirds), 2.0 * (2.0 / 3.0) - 1.0);
    }
}
