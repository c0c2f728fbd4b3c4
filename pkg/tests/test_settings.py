import pprint
import pytest
import valuecast as vc
from valuecast import settings
from valuecast.errors import ConfigError


def test_load_save(tmp_path):
    """Testing load and save"""
    path = tmp_path / "conf.json"
    vc.config.save(path)
    conf = settings.Config()
    conf.load(path)
    assert conf == vc.config


def test_unknown_keys_are_kept():
    conf = settings.Config()
    conf["dummy.val"] = 2
    assert conf["dummy.val"] == 2
    assert "dummy.val" not in vc.config
    del conf["dummy.val"]
    assert "dummy.val" not in conf
    assert dict(settings.Config()) == settings.default


def test_environment_overrides():
    conf = settings.Config()
    conf.load_environment({"VALUECAST_PROCESSES": "3", "VALUECAST_LOG_LEVEL": "debug"})
    assert conf["processes"] == 3
    assert conf["loglevel"] == "DEBUG"
    with pytest.raises(ConfigError):
        conf.load_environment({"VALUECAST_PROCESSES": "many"})
    with pytest.raises(ConfigError):
        conf.load_environment({"VALUECAST_PROCESSES": "0"})


@pytest.mark.parametrize(
    "key, value",
    [
        ("milp.node_budget", 0),
        ("milp.node_budget", 2.5),
        ("milp.tol_int", 0.7),
        ("solver.refactor_interval", True),
        ("processes", -1),
        ("checkpoint.compression", "gzip"),
        ("loglevel", "LOUD"),
    ],
)
def test_validator(key, value):
    with pytest.raises(ConfigError) as info:
        vc.config[key] = value
    assert key in str(info.value)


def test_context_manager():
    before = vc.config["milp.node_budget"]
    with vc.config(milp__node_budget=7, processes=None) as cfg:
        assert cfg["milp.node_budget"] == 7
        assert vc.config["processes"] is None
    assert vc.config["milp.node_budget"] == before
    assert vc.config["processes"] == 1


def test_context_manager_restores_on_error():
    with pytest.raises(ConfigError):
        with vc.config(scale__max_rows=10, scale__max_variables=0):
            pass
    assert vc.config["scale.max_rows"] == settings.default["scale.max_rows"]
    with pytest.raises(RuntimeError):
        with vc.config(display__limit=3):
            raise RuntimeError("boom")
    assert vc.config["display.limit"] == settings.default["display.limit"]


def test_max_iterations():
    assert vc.config.max_iterations(3, 7) == 50 * 10 + 1000
    with vc.config(solver__max_iterations=40):
        assert vc.config.max_iterations(3, 7) == 40


def test_str_and_len():
    assert str(vc.config) == pprint.pformat(vc.config._conf, indent=4)
    assert repr(vc.config) == str(vc.config)
    assert len(vc.config) == len(vc.config._conf)
    assert set(settings.default) <= set(vc.config)
