"""Smoke test for the thermofield Python bindings.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install crates/python`, then run `python crates/python/python/smoke_test.py`.
"""

import json
import math

import thermofield_py as tf


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    p = tf.ThermalParams.from_nbar(1.0)
    close(p.nbar, 1.0, 1e-12)
    close(p.u ** 2 - p.v ** 2, 1.0, 1e-12)

    vac = tf.thermal_vacuum_state(p, 40)
    close(sum(abs(x) ** 2 for x in vac), 1.0, 1e-12)

    # tanh θ = 1/2 against zero temperature
    half = tf.ThermalParams(2.0 * math.log(2.0))
    numeric, analytic = tf.vacuum_overlaps(half, tf.ThermalParams(None), 40)
    close(numeric, math.sqrt(0.75), 1e-9)
    close(analytic, math.sqrt(0.75), 1e-12)

    direct, via_density = tf.qubit_mean_occupation(0.6, 0.8j, p, 40)
    close(direct, via_density, 1e-8)

    close(tf.thermal_mandel_q(p, 120), 1.0, 1e-9)
    q_rho, q_psi = tf.gated_qubit_mandel_q(0.6, 0.8, p, 12, seed=7)
    close(q_rho, q_psi, 1e-8)

    rh = tf.hadamard_gibbs(1.0)
    close(rh[0][0].real, 0.5, 1e-14)
    close(abs(rh[0][1]), 0.5 * math.tanh(0.5), 1e-12)

    s = 1 / math.sqrt(2)
    close(tf.cloning_gap(s, s, p), math.sqrt(2 - math.sqrt(2)), 1e-12)

    for branch in tf.teleport(0.6, 0.8, p, channel="thermo"):
        close(branch["fidelity"], 1.0, 1e-12)
        close(branch["probability"], 0.25, 1e-12)
    cross = tf.teleport(0.6, 0.8, p, tf.ThermalParams.from_nbar(2.0), channel="cross", engine="numeric")
    assert all(b["source_fidelity"] < 1.0 for b in cross)

    doc = json.loads(tf.run_experiment("mandel", {"nbar": 1.0}))
    assert doc["summary"]["all_pass"], doc["summary"]["failing"]

    try:
        tf.run_experiment("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown experiment accepted")

    print("thermofield_py smoke test passed")


if __name__ == "__main__":
    main()
