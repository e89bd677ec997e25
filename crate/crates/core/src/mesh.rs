//! Structured rectangular grid with bilinear Q1 elements.
//!
//! Node (i, j) has id `j * (nx + 1) + i`; element (ex, ey) has id
//! `ey * nx + ex` and its corner nodes are listed counterclockwise starting
//! at the lower-left corner. All assembly code depends on this ordering.

use crate::error::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn build(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid, SimError> {
        if nx == 0 || ny == 0 {
            return Err(SimError::InvalidInput(format!(
                "grid needs at least one element per axis, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0) || !(ly > 0.0) {
            return Err(SimError::InvalidInput(format!(
                "grid extents must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    /// Number of nodes.
    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Number of elements.
    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node_coords(&self, id: usize) -> (f64, f64) {
        let i = id % (self.nx + 1);
        let j = id / (self.nx + 1);
        (i as f64 * self.hx, j as f64 * self.hy)
    }

    /// Corner node ids of element `e`, counterclockwise from lower-left.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let ex = e % self.nx;
        let ey = e / self.nx;
        let n0 = self.node_id(ex, ey);
        [n0, n0 + 1, n0 + 1 + (self.nx + 1), n0 + (self.nx + 1)]
    }

    /// True if the node lies on the domain boundary.
    pub fn is_boundary_node(&self, id: usize) -> bool {
        let i = id % (self.nx + 1);
        let j = id / (self.nx + 1);
        i == 0 || i == self.nx || j == 0 || j == self.ny
    }
}

/// Q1 shape functions on the reference square [-1,1]^2, counterclockwise
/// corner order.
pub fn shape_values(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

/// Physical-space gradients of the Q1 shape functions: reference gradients
/// scaled by 2/hx and 2/hy.
pub fn shape_gradients(xi: f64, eta: f64, hx: f64, hy: f64) -> [(f64, f64); 4] {
    let sx = 2.0 / hx;
    let sy = 2.0 / hy;
    [
        (-0.25 * (1.0 - eta) * sx, -0.25 * (1.0 - xi) * sy),
        (0.25 * (1.0 - eta) * sx, -0.25 * (1.0 + xi) * sy),
        (0.25 * (1.0 + eta) * sx, 0.25 * (1.0 + xi) * sy),
        (-0.25 * (1.0 + eta) * sx, 0.25 * (1.0 - xi) * sy),
    ]
}

/// Tensor 2x2 Gauss rule on [-1,1]^2: coordinates +-1/sqrt(3), unit weights.
/// Exact for bi-cubic polynomials, hence for all Q1*Q1 products.
pub fn gauss_points_2x2() -> [((f64, f64), f64); 4] {
    let g = 1.0 / 3.0_f64.sqrt();
    [
        ((-g, -g), 1.0),
        ((g, -g), 1.0),
        ((g, g), 1.0),
        ((-g, g), 1.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_grid() {
        let g = Grid::build(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.num_elements(), 1);
        assert_eq!(g.hx, 1.0);
        assert_eq!(g.element_nodes(0), [0, 1, 3, 2]);
    }

    #[test]
    fn paper_grid() {
        let g = Grid::build(100, 100, 1.0, 1.0).unwrap();
        assert_eq!(g.num_nodes(), 10201);
        assert_eq!(g.hx, 0.01);
    }

    #[test]
    fn element_indexing() {
        let g = Grid::build(2, 1, 2.0, 1.0).unwrap();
        assert_eq!(g.element_nodes(1), [1, 2, 5, 4]);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Grid::build(0, 1, 1.0, 1.0).is_err());
        assert!(Grid::build(1, 1, -1.0, 1.0).is_err());
        assert!(Grid::build(1, 1, 1.0, 0.0).is_err());
    }

    #[test]
    fn nodal_interpolation_property() {
        let v = shape_values(-1.0, -1.0);
        assert_eq!(v, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(shape_values(0.0, 0.0), [0.25; 4]);
        assert_eq!(shape_values(1.0, 1.0)[2], 1.0);
    }

    #[test]
    fn gauss_rule_exactness() {
        let pts = gauss_points_2x2();
        let total: f64 = pts.iter().map(|(_, w)| w).sum();
        assert_eq!(total, 4.0);
        let xi2eta2: f64 = pts
            .iter()
            .map(|((x, e), w)| w * x * x * e * e)
            .sum();
        assert!((xi2eta2 - 4.0 / 9.0).abs() < 1e-15);
        let xi3: f64 = pts.iter().map(|((x, _), w)| w * x * x * x).sum();
        assert!(xi3.abs() < 1e-15);
    }

    #[test]
    fn node_element_incidence() {
        let g = Grid::build(4, 3, 1.0, 1.0).unwrap();
        let mut counts = vec![0usize; g.num_nodes()];
        for e in 0..g.num_elements() {
            for n in g.element_nodes(e) {
                counts[n] += 1;
            }
        }
        // Corners touch one element, interior nodes four.
        assert_eq!(counts[g.node_id(0, 0)], 1);
        assert_eq!(counts[g.node_id(4, 3)], 1);
        assert_eq!(counts[g.node_id(2, 1)], 4);
    }

    proptest! {
        #[test]
        fn partition_of_unity(xi in -1.0f64..1.0, eta in -1.0f64..1.0) {
            let s: f64 = shape_values(xi, eta).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-14);
            let g = shape_gradients(xi, eta, 0.1, 0.2);
            let gx: f64 = g.iter().map(|p| p.0).sum();
            let gy: f64 = g.iter().map(|p| p.1).sum();
            prop_assert!(gx.abs() < 1e-13 && gy.abs() < 1e-13);
        }

        #[test]
        fn node_coordinates_exact(i in 0usize..9, j in 0usize..7) {
            let g = Grid::build(8, 6, 1.0, 0.75).unwrap();
            let (x, y) = g.node_coords(g.node_id(i, j));
            prop_assert_eq!(x, i as f64 * g.hx);
            prop_assert_eq!(y, j as f64 * g.hy);
        }
    }
}
