import pytest

from heavytraffic.config import DEFAULT_TOLERANCE, load_config, parse_config
from heavytraffic.errors import ConfigError
from heavytraffic.jumps import TwoSidedPareto

BASE = """
[run]
command = limit
seed = 3
a = 0.4, 0.2
T = 10
trials = 1e4

[spec]
kind = TwoSidedPareto
alpha = 1.5
xmin = 1
"""


def test_parse_basic():
    cfg = parse_config(BASE)
    assert cfg.command == "limit" and cfg.seed == 3
    assert cfg.get("a") == [0.4, 0.2] and cfg.get("trials") == 10000
    assert cfg.spec == TwoSidedPareto(alpha=1.5, xmin=1.0)
    assert cfg.tol("ks") == DEFAULT_TOLERANCE["ks"]
    assert len(cfg.config_hash) == 64
    assert cfg.echo()["spec"]["kind"] == "TwoSidedPareto"


def test_hash_follows_text():
    assert parse_config(BASE).config_hash != parse_config(BASE + "\n# note\n").config_hash


def test_mstar_default_ks_tolerance():
    assert parse_config("[run]\ncommand = mstar\n").tol("ks") == 0.03


def test_tolerance_override_and_perturbation():
    cfg = parse_config(BASE + "[tolerance]\nks = 0.1\n[perturbation]\nlaw = rademacher\nb = 0.5\n")
    assert cfg.tol("ks") == 0.1
    assert cfg.perturbation.law == "rademacher" and cfg.perturbation.b == 0.5


@pytest.mark.parametrize("text", [
    BASE + "[extra]\nx = 1\n",
    BASE.replace("T = 10", "T = 10\nhorizon_typo = 5"),
    BASE.replace("a = 0.4, 0.2", "a = "),
    BASE.replace("trials = 1e4", "trials = 0"),
    BASE.replace("trials = 1e4", "trials = 1.5"),
    BASE.replace("kind = TwoSidedPareto", "kind = Cauchy"),
    BASE.replace("alpha = 1.5", "alpha = high"),
    BASE.replace("alpha = 1.5", "alpha = 2.5"),
    BASE + "[tolerance]\nks2 = 0.1\n",
    BASE + "[perturbation]\nlaw = uniform\nscale = 2\n",
    BASE.replace("command = limit", "command = simulate"),
    "[run\ncommand = limit\n",
], ids=["section", "run-key", "empty-list", "zero-trials", "fractional-trials", "kind",
        "number", "alpha-range", "tolerance-key", "perturbation-key", "command", "syntax"])
def test_rejections(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_perturbation_only_for_limit():
    text = "[run]\ncommand = spitzer\na = 0.2\n[perturbation]\nlaw = uniform\n"
    with pytest.raises(ConfigError):
        parse_config(text)


def test_command_mismatch():
    with pytest.raises(ConfigError):
        parse_config(BASE, command="spitzer")


def test_missing_spec_and_required_key():
    cfg = parse_config("[run]\ncommand = normalize\n")
    with pytest.raises(ConfigError):
        cfg.spec
    with pytest.raises(ConfigError):
        cfg.require("a")


def test_load_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(BASE)
    assert load_config(p).get("T") == 10.0
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
