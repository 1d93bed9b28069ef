//! Deterministic abstract cost model standing in for completion time.
//!
//! `cost = alpha_a * (n_train / 1000) * capacity(lambda) * class_factor + beta_a`
//! with `class_factor = 0.5 + 0.5 * n_classes / 11`. At the reference scale
//! (11 000 training frames, 11 classes) MLPCLF(32, 60) costs ~50x GNB.

use super::grid::{list_grid, AlgorithmId, GridPoint};

pub const REFERENCE_TRAIN_SIZE: usize = 11_000;
pub const REFERENCE_CLASSES: usize = 11;

fn coefficients(a: AlgorithmId) -> (f64, f64) {
    match a {
        AlgorithmId::Knn => (3.0, 2.0),
        AlgorithmId::Tree => (0.5, 1.0),
        AlgorithmId::MlpClf => (0.027, 3.0),
        AlgorithmId::Gnb => (1.0, 0.5),
    }
}

pub fn cost(point: &GridPoint, n_train: usize, n_classes: usize) -> f64 {
    let (alpha, beta) = coefficients(point.algorithm);
    let class_factor = 0.5 + 0.5 * n_classes as f64 / REFERENCE_CLASSES as f64;
    alpha * (n_train as f64 / 1000.0) * point.params.capacity() * class_factor + beta
}

/// Largest grid cost at the given scale.
pub fn max_cost(n_train: usize, n_classes: usize) -> f64 {
    list_grid().iter().map(|p| cost(p, n_train, n_classes)).fold(0.0, f64::max)
}

pub fn min_cost(n_train: usize, n_classes: usize) -> f64 {
    list_grid().iter().map(|p| cost(p, n_train, n_classes)).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::grid::HyperParams;

    fn point(a: AlgorithmId, params: HyperParams) -> GridPoint {
        GridPoint::new(a, params).unwrap()
    }

    #[test]
    fn mlp_largest_is_about_fifty_times_gnb() {
        let mlp = cost(
            &point(AlgorithmId::MlpClf, HyperParams::MlpClf { hidden_units: 32, epochs: 60 }),
            REFERENCE_TRAIN_SIZE,
            REFERENCE_CLASSES,
        );
        let gnb = cost(&point(AlgorithmId::Gnb, HyperParams::Gnb { var_floor: 1e-3 }), REFERENCE_TRAIN_SIZE, REFERENCE_CLASSES);
        let ratio = mlp / gnb;
        assert!((45.0..=55.0).contains(&ratio), "ratio {ratio}");
        assert_eq!(max_cost(REFERENCE_TRAIN_SIZE, REFERENCE_CLASSES), mlp);
    }

    #[test]
    fn monotone_in_size_and_capacity() {
        for a in AlgorithmId::ALL {
            let grid: Vec<GridPoint> = a.grid().into_iter().map(|p| point(a, p)).collect();
            for p in &grid {
                let mut last = 0.0;
                for n in [10, 500, 5500, 11_000, 20_000] {
                    let c = cost(p, n, 11);
                    assert!(c > 0.0 && c >= last);
                    last = c;
                }
                assert!(cost(p, 1000, 6) <= cost(p, 1000, 11));
            }
            for w in grid.windows(2) {
                if w[0].params.capacity() <= w[1].params.capacity() {
                    assert!(cost(&w[0], 1000, 11) <= cost(&w[1], 1000, 11));
                }
            }
        }
    }

    #[test]
    fn gnb_points_share_a_cost() {
        let g = AlgorithmId::Gnb.grid();
        assert_eq!(cost(&point(AlgorithmId::Gnb, g[0]), 100, 3), cost(&point(AlgorithmId::Gnb, g[1]), 100, 3));
        assert!(min_cost(11_000, 11) > 0.0);
    }
}
