import pytest

from chns_gsav.config import RunConfig, parse_config, resolve, validate
from chns_gsav.errors import ConfigError, ParseError, ValidationError
from chns_gsav.scenarios import preset


def test_scenario_with_override():
    cfg = parse_config("scenario=bubble\norder=2")
    assert cfg.scenario == "bubble" and cfg.order == 2
    sc = resolve(cfg)
    ref = preset("bubble")
    assert sc.params == ref.params and sc.dt == ref.dt and sc.t_end == ref.t_end
    assert sc.grid == ref.grid


def test_negative_dt():
    with pytest.raises(ValidationError) as exc:
        parse_config("dt=-1")
    assert exc.value.key == "dt"


def test_empty_config():
    with pytest.raises(ValidationError):
        parse_config("")
    with pytest.raises(ValidationError):
        parse_config("# only a comment\n\n")


def test_comments_and_whitespace():
    cfg = parse_config("  scenario = shape1   # preset\n# full line\ndt = 1e-3\n")
    assert cfg.scenario == "shape1" and cfg.dt == 1e-3


@pytest.mark.parametrize(
    "text, line",
    [("scenario=bubble\ncolour=red", 2), ("scenario bubble", 1), ("scenario=bubble\n\ndt=", 3)],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)
    assert isinstance(exc.value, ConfigError)


@pytest.mark.parametrize(
    "text, key",
    [
        ("scenario=bubble\norder=6", "order"),
        ("scenario=bubble\nsnap_every=0", "snap_every"),
        ("scenario=bubble\ndiag_every=0", "diag_every"),
        ("scenario=bubble\ntend=0", "tend"),
        ("scenario=bubble\nkappa0=-3", "kappa0"),
        ("scenario=bubble\nn=33", "n"),
        ("scenario=bubble\norder=two", "order"),
        ("scenario=bubble\nbuoyancy=maybe", "buoyancy"),
        ("scenario=nowhere", "scenario"),
        ("lambda=1\nM=1\neps=1\nnu=1\ndt=1\ntend=1\ninit=blob", "init"),
        ("lambda=0\nM=1", "lambda"),
        ("M=1\neps=1", "lambda"),
    ],
)
def test_validation_names_key(text, key):
    with pytest.raises(ValidationError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_defaults():
    cfg = parse_config("scenario=shape2")
    assert (cfg.order, cfg.out, cfg.snap_every, cfg.diag_every, cfg.debug) == (2, "run", 100, 1, False)


def test_overrides_merge_into_preset():
    text = "scenario=bubble\nbuoyancy=off\nn=32\ndt=2e-4\ntend=0.01\nkappa0=7\nnu=0.5\nseed=3"
    sc = resolve(parse_config(text))
    assert sc.params.chi == 0.0 and not sc.buoyancy
    assert (sc.grid.nx, sc.grid.ny) == (32, 32)
    assert sc.dt == 2e-4 and sc.t_end == 0.01 and sc.seed == 3
    assert sc.params.kappa0 == 7 and sc.params.nu == 0.5
    assert sc.params.M == preset("bubble").params.M


def test_gravity_override():
    sc = resolve(parse_config("scenario=bubble\ngx=0.5"))
    assert sc.params.gravity == (0.5, -1.0)


def test_explicit_parameters():
    text = "lambda=1e-3\nM=1e-2\neps=0.02\nnu=0.1\ngamma=10\nchi=5\ndt=1e-3\ntend=0.002\ninit=bubble\nn=32\nL=2"
    sc = resolve(parse_config(text))
    assert sc.params.lam == 1e-3 and sc.params.chi == 5 and sc.buoyancy
    assert sc.grid.Lx == 2.0 and sc.grid.nx == 32
    phi, u = sc.initial_fields()
    assert phi.grid == sc.grid


def test_validate_run_config_directly():
    with pytest.raises(ValidationError):
        validate(RunConfig(scenario="bubble", order=0))
    assert validate(RunConfig(scenario="bubble")).scenario == "bubble"
