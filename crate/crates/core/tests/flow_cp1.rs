use horoflow_core::flow::{Flow, FlowConfig, FlowOperator, Grid};
use horoflow_core::quadrature::WeightedPolytope;
use horoflow_core::Polytope64;

fn cp1(n: usize, half: f64) -> (FlowOperator<f64>, WeightedPolytope<f64>) {
    let two_delta = Polytope64::from_vertices(&[vec![-2.0], vec![2.0]]).unwrap();
    let wp = WeightedPolytope::plain(two_delta);
    let op = FlowOperator::from_weighted(Grid::new(1, half, n).unwrap(), &wp).unwrap();
    (op, wp)
}

#[test]
fn converges_to_closed_form() {
    let (op, wp) = cp1(257, 6.0);
    let flow = Flow::new(op, &wp, 1, FlowConfig::default(), None).unwrap();
    let start = std::time::Instant::now();
    let res = flow.run(|_, _| Ok(())).unwrap();
    let last = res.rows.last().unwrap();
    assert!(res.converged, "sup {:e} at t = {}", last.sup_dudt, last.t);
    assert!(start.elapsed().as_secs_f64() <= 60.0);
    let grid = &res.potential.grid;
    let diffs: Vec<f64> = (0..grid.len())
        .filter(|&i| grid.coords(i)[0].abs() <= 3.0 + 1e-12)
        .map(|i| {
            let x = grid.coords(i)[0];
            res.potential.values[i] - 2.0 * (2.0 * x.cosh()).ln()
        })
        .collect();
    let hi = diffs.iter().cloned().fold(f64::MIN, f64::max);
    let lo = diffs.iter().cloned().fold(f64::MAX, f64::min);
    assert!((hi - lo) / 2.0 <= 5e-3, "sup error modulo constant {:e}", (hi - lo) / 2.0);
}
