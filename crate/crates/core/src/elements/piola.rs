use crate::mesh::CellGeometry;

/// Contravariant Piola transform of a reference vector value: `B v̂ / det B`.
pub fn piola_map(geom: &CellGeometry, v: [f64; 2]) -> [f64; 2] {
    let b = geom.jacobian;
    [
        (b[0][0] * v[0] + b[0][1] * v[1]) / geom.det,
        (b[1][0] * v[0] + b[1][1] * v[1]) / geom.det,
    ]
}

/// Physical divergence of a Piola-mapped field from its reference divergence.
pub fn piola_div(geom: &CellGeometry, div: f64) -> f64 {
    div / geom.det
}
