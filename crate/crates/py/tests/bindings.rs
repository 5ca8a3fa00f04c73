use pyo3::prelude::*;
use pyo3::types::PyDict;

fn module(py: Python<'_>) -> Bound<'_, PyModule> {
    let m = PyModule::new(py, "pyepinet").unwrap();
    pyepinet::register(&m).unwrap();
    m
}

#[test]
fn network_and_calibration_round_trip() {
    Python::attach(|py| {
        let m = module(py);
        let locals = PyDict::new(py);
        locals.set_item("ep", &m).unwrap();
        py.run(
            c"
net = ep.generate_er(200, 8.0, 1)
assert net.n_nodes == 200
assert abs(net.mean_degree() - 8.0) < 1.5
rep = ep.per_contact_rate(3.0, 0.1, net)
assert rep['basis'] == 'mean-degree'
assert abs(rep['per_contact_rate'] * net.mean_degree() / 0.1 - 3.0) < 1e-9
assert abs(ep.final_size_fraction(2.0) - 0.7968121300200202) < 1e-8
assert abs(ep.herd_immunity_random(3.0) - 2.0 / 3.0) < 1e-12
",
            None,
            Some(&locals),
        )
        .unwrap();
    });
}

#[test]
fn batch_metrics_and_errors() {
    Python::attach(|py| {
        let m = module(py);
        let locals = PyDict::new(py);
        locals.set_item("ep", &m).unwrap();
        py.run(
            c"
net = ep.generate_complete(50)
model = ep.ModelSchema.sir(0.05, 1.0)
b = ep.run_batch(net, model, 30.0, 8, base_seed=3, seeds=2)
assert b.n_realizations == 8
assert b.seeds == list(range(3, 11))
assert len(b.final_sizes()) == 8
mt = b.metrics()
assert mt['n_realizations'] == 8
again = ep.run_batch(net, model, 30.0, 8, base_seed=3, seeds=2)
assert again.final_sizes() == b.final_sizes()
try:
    ep.generate_er(10, -1.0, 0)
    raise AssertionError('expected ValueError')
except ValueError:
    pass
try:
    ep.ModelSchema.from_json('{')
    raise AssertionError('expected ValueError')
except ValueError:
    pass
assert 'q1' in ep.bundled_scenarios()
",
            None,
            Some(&locals),
        )
        .unwrap();
    });
}
