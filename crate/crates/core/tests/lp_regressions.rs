use polylyap::lp::{chebyshev_center, Polytope};

fn load(name: &str) -> Polytope {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let rows: Vec<(Vec<f64>, f64)> = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    let mut p = Polytope::new(rows[0].0.len());
    for (a, b) in rows {
        p.push(a, b);
    }
    p
}

#[test]
fn chebyshev_center_of_degenerate_cone_is_inside() {
    let p = load("sliding_chebyshev.json");
    let ball = chebyshev_center(&p).unwrap();
    assert!(ball.radius > 0.0);
    assert!(p.contains(&ball.center, 1e-9), "center {:?} escapes", ball.center);
}
