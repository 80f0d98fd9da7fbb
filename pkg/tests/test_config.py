import pytest
from hypothesis import given, settings, strategies as st

from cavssk import ConfigError
from cavssk.config import SCHEMA, Axis, SweepConfig, dump_config, parse_config

MINIMAL = f"schema: {SCHEMA}\n"


def test_minimal_document_gives_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg == SweepConfig()
    assert cfg.fixed.n_deg == 1000
    assert cfg.oracle.kind == "none"
    assert [a.count for a in cfg.grid.values()] == [1, 1, 1]


def test_missing_schema():
    with pytest.raises(ConfigError) as e:
        parse_config("seed: 3\n")
    assert e.value.key == "schema"


def test_wrong_schema_version():
    with pytest.raises(ConfigError, match="unsupported schema"):
        parse_config("schema: cavssk.sweep/9\n")


def test_unknown_key_names_key_and_line():
    with pytest.raises(ConfigError) as e:
        parse_config(f"schema: {SCHEMA}\ngrid:\n  theta: {{min: 1.0}}\n  tehta: {{min: 1.0}}\n")
    assert e.value.key == "grid.tehta"
    assert e.value.line == 4
    assert "tehta" in str(e.value)


def test_log_axis_min_zero_names_axis():
    doc = f"schema: {SCHEMA}\ngrid:\n  sigma: {{min: 0.0, max: 2.0, count: 4, scale: log}}\n"
    with pytest.raises(ConfigError) as e:
        parse_config(doc)
    assert e.value.key == "grid.sigma.min"
    assert "sigma" in str(e.value)
    assert e.value.line == 3


@pytest.mark.parametrize(
    "body, key",
    [
        ("grid:\n  theta: {min: 2.0, max: 1.0}\n", "grid.theta.min"),
        ("grid:\n  theta: {min: 1.0, count: 0}\n", "grid.theta.count"),
        ("grid:\n  theta: {min: 0.0}\n", "grid.theta.min"),
        ("grid:\n  theta: {max: 1.0}\n", "grid.theta.min"),
        ("seed: -1\n", "seed"),
        ("seed: abc\n", "seed"),
        ("oracle: {kind: exact}\n", "oracle.kind"),
        ("oracle: {n_samples: 10}\n", "oracle.n_samples"),
        ("output: {formats: [png]}\n", "output.formats"),
        ("output: {x_axis: sigma, y_axis: sigma}\n", "output.y_axis"),
        ("fixed: {cluster: nonexistent}\n", "fixed.cluster"),
        ("fixed: {cluster: bare-gap}\ngrid:\n  delta_e: {min: 1.0}\n", "grid.delta_e"),
        ("couplings: {magnitude: {kind: constant, mu: 1.0}}\n", "couplings.magnitude.mu"),
    ],
)
def test_validation_errors(body, key):
    with pytest.raises(ConfigError) as e:
        parse_config(MINIMAL + body)
    assert e.value.key == key


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError) as e:
        parse_config(f"schema: {SCHEMA}\ngrid: [\n")
    assert e.value.line is not None


def test_cluster_preset_sets_delta_e():
    cfg = parse_config(MINIMAL + "fixed: {cluster: bound-example, n_deg: 500}\n")
    _, _, de = cfg.absolute_axes()
    assert de.tolist() == [pytest.approx(12.0)]
    assert cfg.e_ehf0() == pytest.approx(-24.0)


def test_reduced_units_scale():
    cfg = parse_config(
        MINIMAL
        + "fixed: {n_deg: 200, sigma0: 0.5}\n"
        + "grid:\n  theta: {min: 1.0, max: 2.0, count: 2}\n  delta_e: {min: 0.1}\n"
    )
    t, s, d = cfg.absolute_axes()
    assert t.tolist() == [0.5, 1.0]
    assert s.tolist() == [0.5]
    assert d.tolist() == [pytest.approx(10.0)]


def test_log_axis_values():
    assert Axis(1.0, 100.0, 3, "log").values().tolist() == pytest.approx([1.0, 10.0, 100.0])


axis = st.builds(
    lambda lo, span, n, log: {"min": lo, "max": lo + span, "count": n, "scale": "log" if log else "linear"},
    st.floats(0.01, 10.0),
    st.floats(0.0, 10.0),
    st.integers(1, 100),
    st.booleans(),
)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**40),
    theta=axis,
    sigma=axis,
    n_deg=st.integers(1, 10**6),
    kind=st.sampled_from(["none", "mc", "saddle"]),
    cluster=st.sampled_from([None, "bound-example"]),
    model=st.sampled_from(["goe", "dipole"]),
)
def test_round_trip(seed, theta, sigma, n_deg, kind, cluster, model):
    import yaml

    doc = {
        "schema": SCHEMA,
        "seed": seed,
        "grid": {"theta": theta, "sigma": sigma},
        "fixed": {"n_deg": n_deg, "cluster": cluster},
        "oracle": {"kind": kind},
        "couplings": {"model": model, "magnitude": {"kind": "lognormal", "mu": 0.1, "s": 0.2}},
    }
    cfg = parse_config(yaml.safe_dump(doc))
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)
