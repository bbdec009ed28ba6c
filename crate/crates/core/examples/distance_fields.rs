//! Distance transform and descent field of a sphere, checked against the
//! analytic distance.
//!
//! cargo run --release --example distance_fields

use bivmesh::phantom::sphere_volume;
use bivmesh::volume::{boundary_distance, gradient_field, sample_trilinear, Label, NdcMap};
use bivmesh::Vec3;

fn main() -> bivmesh::Result<()> {
    let radius = 0.5;
    let v = sphere_volume([64, 64, 64], 4.0, radius, Label::Lv)?;
    let ndc = NdcMap::for_geometry(v.geometry());
    let mm_per_ndc = 1.0 / ndc.ndc_per_mm(v.geometry());
    let d = boundary_distance(&v.map(|l| *l == Label::Lv));
    let field = gradient_field(&d.field, &ndc);

    println!("{:>8} {:>12} {:>12} {:>14}", "r (NDC)", "d (mm)", "exact (mm)", "r + step (NDC)");
    let dir = Vec3::new(1.0, 2.0, 0.5).normalize();
    for k in 0..=8 {
        let r = 0.1 + 0.1 * k as f64;
        let p = dir * r;
        let dist = sample_trilinear(&d.field, &ndc, p)?;
        let step = sample_trilinear(&field, &ndc, p)?;
        println!(
            "{r:>8.2} {dist:>12.3} {:>12.3} {:>14.4}",
            (r - radius).abs() * mm_per_ndc,
            (p + step).norm()
        );
    }
    Ok(())
}
