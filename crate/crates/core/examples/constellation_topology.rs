//! Build a Walker-style constellation, list one satellite's links and the
//! length of each.
//!
//! ```bash
//! cargo run --example constellation_topology
//! ```

use dfedsat::topology::{build_constellation, link_distance, satellite_position, ConstellationConfig, SatelliteId};

fn main() -> dfedsat::Result<()> {
    let config = ConstellationConfig::default();
    let graph = build_constellation(&config)?;
    println!(
        "{} planes x {} satellites at {:.0} km: {} intra-plane and {} inter-plane links",
        config.num_planes,
        config.sats_per_plane,
        config.altitude / 1e3,
        graph.intra_edges.len(),
        graph.inter_edges.len()
    );

    let sat = SatelliteId::new(3, 4);
    let [x, y, z] = satellite_position(&config, sat)?;
    println!("{sat} at ({:.0}, {:.0}, {:.0}) km", x / 1e3, y / 1e3, z / 1e3);

    let neighbors = graph.neighbors(sat)?;
    for (kind, others) in [("intra", neighbors.intra().collect::<Vec<_>>()), ("inter", neighbors.inter().collect())] {
        for other in others {
            println!("  {kind} {other}: {:8.1} km", link_distance(&config, sat, other)? / 1e3);
        }
    }

    // small constellations collapse duplicate neighbors
    for (m, k) in [(1, 5), (2, 2), (3, 1)] {
        let small = ConstellationConfig::new(m, k);
        let g = build_constellation(&small)?;
        println!("M={m} K={k}: degree of (0, 0) is {}", g.degree(SatelliteId::new(0, 0))?);
    }
    Ok(())
}
