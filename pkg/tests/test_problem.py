import math
import sys
import textwrap

import numpy as np
import pytest

from surropt.exceptions import ConfigError, ObjectiveError
from surropt.problem import (
    CommandObjective,
    ProblemSpec,
    builtin_problem,
    evaluate,
    is_feasible,
    load_problem,
)


def branin_grid_min(n=2001):
    """Dense-grid oracle for the Branin minimum (independent vectorized formula)."""
    x1 = np.linspace(-5, 10, n)[:, None]
    x2 = np.linspace(0, 15, n)[None, :]
    b, c, t = 5.1 / (4 * np.pi**2), 5 / np.pi, 1 / (8 * np.pi)
    f = (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10
    return f.min()


def test_load_continuous_problem():
    spec = load_problem(
        {"dim": 2, "lower": [-5, 0], "upper": [10, 15], "integer_idx": [], "objective": "branin"}
    )
    assert (spec.dim, spec.n_cont, spec.n_int) == (2, 2, 0)
    assert spec.kind == "continuous"
    np.testing.assert_array_equal(spec.lower, [-5, 0])


def test_load_mixed_problem_counts():
    spec = load_problem(
        {"dim": 4, "lower": [0] * 4, "upper": [5] * 4, "integer_idx": [1, 2], "objective": "sphere"}
    )
    assert (spec.n_cont, spec.n_int) == (2, 2)
    assert spec.integer_idx == (0, 1)
    assert spec.n_cont + spec.n_int == spec.dim


def test_integer_bounds_rounded_inward():
    spec = load_problem(
        {"dim": 1, "lower": [0.3], "upper": [4.7], "integer_idx": [1], "objective": "sphere"}
    )
    np.testing.assert_array_equal(spec.lower, [math.ceil(0.3)])
    np.testing.assert_array_equal(spec.upper, [math.floor(4.7)])


@pytest.mark.parametrize(
    "config, match",
    [
        ({"dim": 2, "upper": [1, 1], "objective": "sphere"}, "missing bounds"),
        ({"dim": 2, "lower": [0], "upper": [1, 1], "objective": "sphere"}, "missing bounds"),
        ({"dim": 1, "lower": [1], "upper": [1], "objective": "sphere"}, "lower >= upper"),
        ({"dim": 2, "lower": [0, 0], "upper": [1, 1], "integer_idx": [3], "objective": "sphere"},
         "out of range"),
        ({"dim": 2, "lower": [0, 0], "upper": [1, 1], "objective": "nosuch"}, "unknown builtin"),
        ({"dim": 1, "lower": [0.2], "upper": [0.8], "integer_idx": [1], "objective": "sphere"},
         "lower >= upper"),
    ],
)
def test_load_problem_errors(config, match):
    with pytest.raises(ConfigError, match=match):
        load_problem(config)


def test_load_problem_from_yaml_file(tmp_path):
    path = tmp_path / "p.yaml"
    path.write_text(
        textwrap.dedent(
            """\
            name: mixed
            dim: 3
            lower: [-1, -1, 0]
            upper: [1, 1, 4]
            integer_idx: [3]
            objective:
              kind: builtin
              name: sphere
            """
        )
    )
    spec = load_problem(path)
    assert spec.name == "mixed"
    assert spec.integer_idx == (2,)
    assert evaluate(spec, [0.5, -0.5, 2]) == pytest.approx(4.5)


def test_sphere_at_origin():
    assert evaluate(builtin_problem("sphere", 5), np.zeros(5)) == 0.0


def test_branin_global_minimum_matches_grid_oracle():
    value = evaluate(builtin_problem("branin", 2), [math.pi, 2.275])
    assert value == pytest.approx(0.397887, abs=1e-6)
    assert branin_grid_min() == pytest.approx(value, abs=1e-4)
    assert branin_grid_min() >= value - 1e-9


def test_builtin_catalogue_bounds():
    b = builtin_problem("branin", 2)
    np.testing.assert_array_equal(b.lower, [-5, 0])
    np.testing.assert_array_equal(b.upper, [10, 15])
    a = builtin_problem("ackley", 10)
    np.testing.assert_array_equal(a.lower, np.full(10, -32.768))
    assert evaluate(a, np.zeros(10)) == pytest.approx(0.0, abs=1e-12)
    r = builtin_problem("rastrigin-int", 5)
    assert r.integer_idx == (0, 1, 2, 3, 4)
    np.testing.assert_array_equal(r.lower, -5)
    m = builtin_problem("rastrigin-mixed", 5)
    assert (m.n_cont, m.n_int) == (3, 2)


def test_builtin_errors():
    with pytest.raises(ConfigError):
        builtin_problem("nosuch", 2)
    with pytest.raises(ConfigError):
        builtin_problem("branin", 3)


def test_evaluate_rejects_infeasible_and_non_finite():
    spec = builtin_problem("sphere-int", 2)
    with pytest.raises(ValueError):
        evaluate(spec, [0.5, 0])
    with pytest.raises(ValueError):
        evaluate(spec, [10, 0])
    bad = ProblemSpec(1, [0], [1], (), lambda x: float("nan"))
    with pytest.raises(ObjectiveError, match="non-finite"):
        evaluate(bad, [0.5])


def test_evaluate_is_deterministic():
    spec = builtin_problem("ackley", 3)
    x = [0.3, -1.2, 4.0]
    assert evaluate(spec, x) == evaluate(spec, x)


def test_is_feasible_rows():
    spec = builtin_problem("rastrigin-mixed", 2)
    X = np.array([[0.5, 1.0], [0.5, 1.5], [6.0, 1.0]])
    np.testing.assert_array_equal(is_feasible(spec, X), [True, False, False])


class TestCommandObjective:
    def test_echo_passthrough(self):
        obj = CommandObjective(f"{sys.executable} -c \"print(3.5)\"")
        assert obj([1.0, 2.0]) == 3.5

    def test_point_on_stdin(self):
        script = "import sys; print(sum(float(t) ** 2 for t in sys.stdin.read().split()))"
        obj = CommandObjective(f"{sys.executable} -c \"{script}\"")
        assert obj([1.0, 2.0]) == pytest.approx(5.0)

    def test_point_substituted(self):
        script = "import sys; print(float(sys.argv[1]) - float(sys.argv[2]))"
        obj = CommandObjective(f"{sys.executable} -c \"{script}\" {{x}}")
        assert obj([3.0, 1.0]) == pytest.approx(2.0)

    def test_nonzero_exit(self):
        obj = CommandObjective(f"{sys.executable} -c \"import sys; sys.exit(3)\"")
        with pytest.raises(ObjectiveError, match="exited with 3"):
            obj([0.0])

    def test_unparsable_output(self):
        obj = CommandObjective(f"{sys.executable} -c \"print('hello world')\"")
        with pytest.raises(ObjectiveError, match="unparsable"):
            obj([0.0])

    def test_config_command_kind(self):
        spec = load_problem(
            {
                "dim": 1,
                "lower": [0],
                "upper": [1],
                "objective": {"kind": "command", "cmd": f"{sys.executable} -c \"print(3.5)\""},
            }
        )
        assert evaluate(spec, [0.5]) == 3.5
