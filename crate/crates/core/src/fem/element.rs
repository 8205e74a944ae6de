//! Bilinear quadrilateral element matrices on axis-aligned rectangles,
//! integrated with 2×2 Gauss quadrature.

const CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

fn gauss_points() -> [(f64, f64); 4] {
    let g = 1.0 / 3.0f64.sqrt();
    [(-g, -g), (g, -g), (g, g), (-g, g)]
}

/// Physical gradients of the 4 shape functions at reference point `(xi, eta)`.
fn gradients(hx: f64, hy: f64, xi: f64, eta: f64) -> [[f64; 2]; 4] {
    std::array::from_fn(|a| {
        let (xa, ya) = CORNERS[a];
        let dxi = 0.25 * xa * (1.0 + ya * eta);
        let deta = 0.25 * ya * (1.0 + xa * xi);
        [dxi * 2.0 / hx, deta * 2.0 / hy]
    })
}

/// `∫ κ ∇N_a · ∇N_b` over one `hx × hy` element.
pub fn darcy_stiffness(hx: f64, hy: f64, kappa: f64) -> [[f64; 4]; 4] {
    let det = 0.25 * hx * hy;
    let mut k = [[0.0; 4]; 4];
    for (xi, eta) in gauss_points() {
        let g = gradients(hx, hy, xi, eta);
        for a in 0..4 {
            for b in 0..4 {
                k[a][b] += kappa * (g[a][0] * g[b][0] + g[a][1] * g[b][1]) * det;
            }
        }
    }
    k
}

/// Plane-strain constitutive matrix in Voigt order `(xx, yy, xy)` with
/// engineering shear strain.
pub fn plane_strain_matrix(young: f64, poisson: f64) -> [[f64; 3]; 3] {
    let c = young / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    [
        [c * (1.0 - poisson), c * poisson, 0.0],
        [c * poisson, c * (1.0 - poisson), 0.0],
        [0.0, 0.0, c * (1.0 - 2.0 * poisson) / 2.0],
    ]
}

/// `∫ ε(N_a) : C : ε(N_b)` with interleaved dofs `(u_x, u_y)` per corner.
pub fn elasticity_stiffness(hx: f64, hy: f64, young: f64, poisson: f64) -> [[f64; 8]; 8] {
    let d = plane_strain_matrix(young, poisson);
    let det = 0.25 * hx * hy;
    let mut k = [[0.0; 8]; 8];
    for (xi, eta) in gauss_points() {
        let g = gradients(hx, hy, xi, eta);
        let mut bmat = [[0.0; 8]; 3];
        for a in 0..4 {
            bmat[0][2 * a] = g[a][0];
            bmat[1][2 * a + 1] = g[a][1];
            bmat[2][2 * a] = g[a][1];
            bmat[2][2 * a + 1] = g[a][0];
        }
        let mut db = [[0.0; 8]; 3];
        for r in 0..3 {
            for c in 0..8 {
                db[r][c] = (0..3).map(|s| d[r][s] * bmat[s][c]).sum();
            }
        }
        for i in 0..8 {
            for j in 0..8 {
                k[i][j] += (0..3).map(|r| bmat[r][i] * db[r][j]).sum::<f64>() * det;
            }
        }
    }
    k
}
