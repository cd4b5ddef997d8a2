import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hadamard import (DensityTerm, KernelDistribution, KernelSpecError, apply_to_test,
                      default_grid, dump_kernel, grid_from_window, kernel_density, kernel_dirac,
                      kernel_from_spec, kernel_hash, kernel_to_spec, load_kernel,
                      support_distance, validate_theta_rapid)
from hadamard.kernel import K_UNBOUNDED, dual_word_at_point

from conftest import log_bump

phi = log_bump(0.0, 0.5)


def test_dirac_consistency():
    for a, c in [(2.0, 1.5), (-0.7, -2.0), (1.0, 1.0)]:
        assert apply_to_test(kernel_dirac([a], c), phi) == c * float(phi(np.array(a)))


def test_theta_dirac_evaluates_dual_word():
    # (theta* phi)(a) = -a phi'(a) - phi(a) for phi = exp(-(x-1)^2)
    f = lambda x: np.exp(-(x - 1.0) ** 2)  # noqa: E731
    a = 1.3
    exact = -a * (-2 * (a - 1.0)) * math.exp(-(a - 1.0) ** 2) - math.exp(-(a - 1.0) ** 2)
    assert dual_word_at_point(f, (1,), (a,)) == pytest.approx(exact, rel=1e-9)


def test_density_evaluates_zero_outside_quadrant():
    term = kernel_density("exp_symmetric", 1).density_terms[0]
    x = np.array([-2.0, 0.5, 2.0])
    v = term(x)
    assert v[0] == 0.0 and v[1] == pytest.approx(math.exp(-2.5)) and v[2] > 0


def test_exp_symmetric_pairing_against_bessel():
    # int_0^inf exp(-x - 1/x) dx = 2 K_1(2)
    from scipy.special import kv
    T = kernel_density("exp_symmetric", 1)
    got = apply_to_test(T, lambda x: np.ones_like(x), grid_from_window(1, -7.0, 7.0, 2048))
    assert got == pytest.approx(2 * kv(1, 2.0), rel=1e-10)


@given(st.integers(0, 1000))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    T1 = kernel_density("gauss_log", 1, {"mu": rng.uniform(-1, 1), "s": 0.5},
                        beta=(int(rng.integers(0, 3)),), weight=rng.uniform(-2, 2))
    T2 = kernel_density("exp_symmetric", 1, quadrant=(-1,), weight=rng.uniform(-2, 2))
    T2 = T2 + kernel_dirac([rng.uniform(0.5, 2)], rng.uniform(-1, 1))
    g = default_grid(1)
    both = apply_to_test(T1 + T2, phi, g)
    parts = apply_to_test(T1, phi, g) + apply_to_test(T2, phi, g)
    assert abs(both - parts) <= 1e-12 * (1 + abs(both))


def test_integration_by_parts_representation():
    mu, s = 0.3, 0.4
    T_word = kernel_density("gauss_log", 1, {"mu": mu, "s": s}, beta=(1,))
    flat = DensityTerm((0,), (1,), "theta_gauss_log", {},
                       func=lambda u: -(u[0] - mu) / s ** 2 * np.exp(-(u[0] - mu) ** 2 / (2 * s * s)))
    T_flat = KernelDistribution(1, (flat,))
    a, b = apply_to_test(T_word, phi), apply_to_test(T_flat, phi)
    assert abs(a - b) <= 1e-6 * (1 + abs(b))


def test_validate_theta_rapid():
    T = kernel_density("exp_symmetric", 1)
    rep = validate_theta_rapid(T, 3, default_grid(1))
    assert rep.ok
    wide = kernel_density("gauss_log", 1, {"mu": 0.0, "s": 3.0})
    assert not validate_theta_rapid(wide, 1, default_grid(1)).ok
    with pytest.raises(ValueError):
        validate_theta_rapid(T, 4)


def test_support_distance():
    assert support_distance(KernelDistribution(1)) == math.inf
    assert support_distance(kernel_dirac([-0.25]) + kernel_dirac([3.0])) == 0.25
    assert support_distance(kernel_density("exp_symmetric", 1)) == 0.0


def test_kernel_sum_takes_smaller_k_star():
    T = kernel_dirac([1.0]) + kernel_density("exp_symmetric", 1, k_star=2)
    assert T.k_star == 2
    assert kernel_dirac([1.0]).k_star == K_UNBOUNDED
    with pytest.raises(ValueError):
        kernel_dirac([1.0]) + kernel_dirac([1.0, 1.0])


def test_spec_roundtrip(tmp_path):
    g = grid_from_window(1, -2.0, 2.0, 16)
    T = (kernel_density("gauss_log", 2, {"mu": [0.1, -0.2], "s": [0.5, 0.6]},
                        quadrant=(1, -1), beta=(1, 0), weight=-0.5)
         + kernel_dirac([2.0, -1.0], 0.25, beta=(0, 2)))
    path = tmp_path / "k.json"
    dump_kernel(T, path)
    back = load_kernel(path)
    assert kernel_to_spec(back) == kernel_to_spec(T)
    assert kernel_hash(back) == kernel_hash(T)
    table = {"dim": 1, "terms": [{"kind": "density", "beta": [0], "quadrant": [1],
                                  "family": "table", "params": {
                                      "grid": g.to_dict(), "values": list(np.exp(-g.axis(0) ** 2)),
                                      "support": [[0.2, 5.0]]}}]}
    T3 = kernel_from_spec(table)
    node = g.axis(0)[5]
    assert T3.density_terms[0].on_log([np.array([node])])[0] == pytest.approx(math.exp(-node ** 2))
    assert T3.density_terms[0].on_log([np.array([3.0])])[0] == 0.0


def test_hash_changes_with_content():
    assert kernel_hash(kernel_dirac([2.0])) != kernel_hash(kernel_dirac([2.0], 1.5))


@pytest.mark.parametrize("spec, where", [
    ({"dim": 0, "terms": []}, "dim"),
    ({"dim": 1, "terms": {}}, "terms"),
    ({"dim": 1, "terms": [], "color": 1}, "unknown"),
    ({"dim": 1, "terms": [{"kind": "dirac", "beta": [0], "params": {"point": [0.0]}}]},
     "terms[0].params.point"),
    ({"dim": 1, "terms": [{"kind": "density", "beta": [0], "quadrant": [2],
                           "family": "exp_symmetric", "params": {}}]}, "terms[0].quadrant"),
    ({"dim": 1, "terms": [{"kind": "density", "beta": [0], "quadrant": [1],
                           "family": "gauss_log", "params": {"s": -1.0}}]}, "terms[0]"),
    ({"dim": 1, "terms": [{"kind": "density", "beta": [0], "quadrant": [1],
                           "family": "nope", "params": {}}]}, "terms[0].family"),
    ({"dim": 1, "k_star": -1, "terms": []}, "k_star"),
])
def test_spec_errors_name_the_field(spec, where):
    with pytest.raises(KernelSpecError) as info:
        kernel_from_spec(spec)
    assert where in str(info.value)


def test_json_syntax_error_has_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"dim": 1,\n "terms": [\n}')
    with pytest.raises(KernelSpecError, match="line 3"):
        load_kernel(p)


def test_shipped_kernel_files_load():
    import pathlib
    root = pathlib.Path(__file__).resolve().parents[1] / "kernels"
    names = sorted(p.name for p in root.glob("*.json"))
    assert {"dirac_identity.json", "dirac_a2.json", "exp_symmetric.json"} <= set(names)
    for p in root.glob("*.json"):
        json.loads(p.read_text())
        load_kernel(p)
