//! Largest-remainder apportionment of fractional targets to integer counts.

/// Converts fractional targets into integers that sum to exactly `total`.
///
/// Each slot first receives `⌊exact[i]⌋` (clamped to `caps[i]`); the units
/// still missing go one at a time to the slots with the largest fractional
/// remainders, ties to the lower index. Slots at capacity are skipped. If
/// floating-point drift made the floors overshoot `total`, units are taken
/// back from the smallest remainders first.
///
/// Panics if `total` exceeds `Σ caps`.
pub fn largest_remainder(exact: &[f64], caps: &[u64], total: u64) -> Vec<u64> {
    assert_eq!(exact.len(), caps.len());
    let capacity: u64 = caps.iter().sum();
    assert!(total <= capacity, "total {total} exceeds capacity {capacity}");

    let mut counts: Vec<u64> = exact
        .iter()
        .zip(caps)
        .map(|(&x, &cap)| {
            let x = if x.is_finite() { x.max(0.0) } else { 0.0 };
            (x.floor() as u64).min(cap)
        })
        .collect();
    let remainder = |i: usize| {
        let x = exact[i];
        if x.is_finite() && x > 0.0 {
            x - x.floor()
        } else {
            0.0
        }
    };

    let mut order: Vec<usize> = (0..exact.len()).collect();
    // Largest remainder first, then lower index.
    order.sort_by(|&a, &b| remainder(b).total_cmp(&remainder(a)).then(a.cmp(&b)));

    let mut assigned: u64 = counts.iter().sum();
    while assigned < total {
        let before = assigned;
        for &i in &order {
            if assigned == total {
                break;
            }
            if counts[i] < caps[i] {
                counts[i] += 1;
                assigned += 1;
            }
        }
        debug_assert!(assigned > before);
    }
    while assigned > total {
        for &i in order.iter().rev() {
            if assigned == total {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                assigned -= 1;
            }
        }
    }
    counts
}

/// `round(x)` with halves rounded away from zero, as a count.
pub fn round_count(x: f64) -> u64 {
    if x.is_finite() && x > 0.0 {
        x.round() as u64
    } else {
        0
    }
}
