//! Template topology under midpoint and Loop subdivision, umbrella
//! smoothing and voxelization.
//!
//! cargo run --release --example subdivision [out.ply]

use bivmesh::mesh::{laplacian_filter, loop_subdivide, midpoint_subdivide, save_mesh, voxelize, Region, VertexLabel};
use bivmesh::metrics::{non_manifold_ratio, normal_consistency};
use bivmesh::phantom::procedural_template;
use bivmesh::volume::{Geometry, NdcMap};

fn main() -> bivmesh::Result<()> {
    let t = procedural_template(0)?;
    let (n_comp, _) = t.components();
    println!("template: {} vertices, {} faces, {n_comp} components", t.num_vertices(), t.num_faces());
    for l in VertexLabel::ALL {
        println!("  {:<8} {}", l.name(), t.indices_with_label(l).len());
    }

    let (mid, _) = midpoint_subdivide(&t)?;
    let lp = loop_subdivide(&t)?;
    let lp2 = loop_subdivide(&lp)?;
    println!("midpoint x1: {} V {} F", mid.num_vertices(), mid.num_faces());
    println!("loop x2:     {} V {} F", lp2.num_vertices(), lp2.num_faces());
    let smooth = laplacian_filter(&lp2, 0.13, 10);
    println!(
        "normal consistency {:.4} -> {:.4} after smoothing; non-manifold ratio {}",
        normal_consistency(&lp2)?,
        normal_consistency(&smooth)?,
        non_manifold_ratio(&smooth)?
    );

    let g = Geometry::centered([128, 128, 128], [2.0; 3])?;
    let ndc = NdcMap::for_geometry(&g);
    for r in [Region::LvEndo, Region::RvEndo, Region::Heart] {
        let mask = voxelize(&smooth, r, &g, &ndc)?;
        let n = mask.data().iter().filter(|&&b| b).count();
        println!("{r:?}: {n} voxels = {:.1} ml", n as f64 * 8.0 / 1000.0);
    }

    if let Some(out) = std::env::args().nth(1) {
        save_mesh(&out, &smooth)?;
        println!("wrote {out}");
    }
    Ok(())
}
