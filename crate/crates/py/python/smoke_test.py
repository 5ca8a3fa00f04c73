"""Smoke test for the pyepinet extension. Run after `maturin develop`."""

import math
import tempfile
from pathlib import Path

import pyepinet as ep


def main():
    net = ep.generate_ba(300, 3, 7)
    print(net)
    lam = net.spectral_radius()
    rep = ep.per_contact_rate(2.5, 0.2, net, basis="spectral")
    assert math.isclose(rep["per_contact_rate"] * lam / 0.2, 2.5, rel_tol=1e-9)

    model = ep.ModelSchema.seir(rep["per_contact_rate"], 0.5, 0.2)
    batch = ep.run_batch(net, model, 200.0, 20, base_seed=1, seeds=3)
    m = batch.metrics(analytic_final_size=ep.final_size_fraction(2.5))
    print("final size mean", m["final_size_mean"], "peak", m["peak_time"], m["peak_size"])

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "net.txt"
        net.save(str(path))
        back = ep.Network.load(str(path))
        assert back.n_edges() == net.n_edges()
        out = ep.run_scenario("q5_desk", out=d, realizations=10, sub="random_q0")
        assert out[0]["metrics"]["n_realizations"] == 10
        assert (Path(d) / "q5_desk" / "random_q0" / "metrics.json").exists()

    try:
        ep.ModelSchema.from_json('{"compartments": []}')
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("empty schema accepted")

    print("bundled:", ", ".join(ep.bundled_scenarios()))
    print("ok")


if __name__ == "__main__":
    main()
