#![allow(dead_code)]

use rrg_spectra::graph_ensemble::{generate_regular, RegularGraph};

fn graph(v: usize, d: usize, edges: &[(usize, usize)]) -> RegularGraph {
    RegularGraph::from_edges(v, d, 0, edges).unwrap()
}

fn complete(v: usize) -> RegularGraph {
    let mut e = Vec::new();
    for i in 0..v {
        for j in i + 1..v {
            e.push((i, j));
        }
    }
    graph(v, v - 1, &e)
}

fn complete_bipartite(k: usize) -> RegularGraph {
    let mut e = Vec::new();
    for i in 0..k {
        for j in k..2 * k {
            e.push((i, j));
        }
    }
    graph(2 * k, k, &e)
}

pub fn petersen() -> RegularGraph {
    let mut e = Vec::new();
    for i in 0..5 {
        e.push((i, (i + 1) % 5));
        e.push((i, i + 5));
        e.push((5 + i, 5 + (i + 2) % 5));
    }
    graph(10, 3, &e)
}

fn prism() -> RegularGraph {
    graph(6, 3, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)])
}

fn cube() -> RegularGraph {
    let mut e = Vec::new();
    for i in 0..8usize {
        for b in 0..3 {
            let j = i ^ (1 << b);
            if i < j {
                e.push((i, j));
            }
        }
    }
    graph(8, 3, &e)
}

fn heawood() -> RegularGraph {
    let mut e: Vec<(usize, usize)> = (0..14).map(|i| (i, (i + 1) % 14)).collect();
    for i in (0..14).step_by(2) {
        e.push((i, (i + 5) % 14));
    }
    graph(14, 3, &e)
}

fn octahedron() -> RegularGraph {
    let mut e = Vec::new();
    for i in 0..6 {
        for j in i + 1..6 {
            if j != i + 3 {
                e.push((i, j));
            }
        }
    }
    graph(6, 4, &e)
}

/// Named small connected regular graphs.
pub fn named_fixtures() -> Vec<(&'static str, RegularGraph)> {
    vec![
        ("K4", complete(4)),
        ("K5", complete(5)),
        ("Petersen", petersen()),
        ("K3,3", complete_bipartite(3)),
        ("prism", prism()),
        ("cube", cube()),
        ("Heawood", heawood()),
        ("octahedron", octahedron()),
        ("K4,4", complete_bipartite(4)),
    ]
}

/// Random connected 3- and 4-regular graphs with at most 14 vertices.
pub fn random_fixtures() -> Vec<(String, RegularGraph)> {
    let mut out = Vec::new();
    for (v, d) in [(10, 3), (12, 3), (14, 3), (9, 4), (11, 4), (14, 4)] {
        let mut seed = 1000 + v as u64 * 10 + d as u64;
        loop {
            let g = generate_regular(v, d, seed).unwrap();
            if g.is_connected() {
                out.push((format!("random V={v} d={d} seed={seed}"), g));
                break;
            }
            seed += 1;
        }
    }
    out
}

pub fn all_fixtures() -> Vec<(String, RegularGraph)> {
    named_fixtures()
        .into_iter()
        .map(|(n, g)| (n.to_string(), g))
        .chain(random_fixtures())
        .collect()
}
