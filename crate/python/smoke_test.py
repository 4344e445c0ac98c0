"""Smoke test for the hyperflow extension module.

Build and install it first, for example with
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/hyperflow-*.whl
"""

import math

import hyperflow as hf


def main():
    grid = hf.Grid.axisym(2, 64)

    ball = hf.Surface.centered_sphere(grid, 1.0)
    wl = ball.functionals()["Wl"]
    assert abs(wl[0] - 4 * math.pi * math.sinh(1.0) ** 3) < 1e-10
    assert abs(hf.ball_profile_value(2, 0, 1.0) - wl[0]) < 1e-10
    for r in ball.check(["thm13", "thm14", "thm15"]):
        assert r["verdict"] == "equality", r

    assert hf.elementary([1.0, 2.0, 3.0]) == [1.0, 2.0, 11.0 / 3.0, 6.0]
    assert hf.newton_maclaurin([1.0, 2.0, 3.0], 1) > 0

    start = hf.Surface.perturbed_sphere(grid, 1.0, 0.05, 2)
    run = hf.run_flow(start, "weighted_vol_preserving", "mean", 10.0, sample_interval=0.1)
    m = run.monitors()
    drift = abs(m[-1]["Wl"][0] - m[0]["Wl"][0]) / m[0]["Wl"][0]
    assert run.converged and drift < 1e-10
    assert abs(run.r_final_mean - run.r_predicted) < 1e-3
    assert all(run.audit().values())
    assert all(v <= 1.0 for v in run.variational().values())

    try:
        bad = hf.Surface.perturbed_sphere(grid, 1.0, 0.35, 4)
        hf.run_flow(bad, "sx_inverse", "quotient", 1.0, k=2, phi="neg_inv_power", phi_p=1.0)
    except hf.FlowAbortError as e:
        assert "cone" in str(e)
    else:
        raise AssertionError("expected a cone violation")

    print(f"ok: converged at t={run.t:.3f} after {run.steps} steps, r={run.r_final_mean:.6f}")


if __name__ == "__main__":
    main()
