// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Fraction thresholds turned into integer count floors.

/// Smallest count `c` with `c >= fraction * total`.
///
/// Products that land within float noise of an integer snap to it, so that
/// `0.7 * 10` asks for 7 and not 8.
pub fn min_count(fraction: f64, total: usize) -> usize {
    let exact = fraction * total as f64;
    let nearest = exact.round();
    if (exact - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest.max(0.0) as usize
    } else {
        exact.ceil().max(0.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snaps_float_noise() {
        assert_eq!(min_count(0.7, 10), 7);
        assert_eq!(min_count(0.3, 1000), 300);
        assert_eq!(min_count(0.05, 1000), 50);
        assert_eq!(min_count(0.1, 3), 1);
        assert_eq!(min_count(0.9, 7), 7);
        assert_eq!(min_count(1.0, 0), 0);
    }

    #[test]
    fn matches_exact_rational_floor() {
        // tenths against every population up to 30: c >= t/10 * n  <=>  10c >= t*n
        for tenths in 1..=10usize {
            for n in 0..=30usize {
                let expected = (tenths * n).div_ceil(10);
                assert_eq!(min_count(tenths as f64 / 10.0, n), expected, "{tenths}/10 of {n}");
            }
        }
    }
}
