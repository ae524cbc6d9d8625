import pytest

from cefrlevel.config import PipelineConfig
from cefrlevel.synthetic import default_world, gen_synthetic


@pytest.fixture(scope="session")
def synth_resources(tmp_path_factory):
    d = tmp_path_factory.mktemp("resources")
    return default_world().write_resources(d)


def small_config(resources, **sections) -> PipelineConfig:
    data = {
        "resources": {k: str(v) for k, v in resources.items()},
        "clusters": {"k": 6},
        "topics": {"counts": [2, 3], "burn_in": 20, "sample_every": 2, "n_samples": 2, "infer_iters": 12},
        "lm": {"rare_threshold": 3},
        "model": {"n_rounds": 15, "min_samples_leaf": 5},
    }
    for key, value in sections.items():
        data[key] = {**data.get(key, {}), **value} if isinstance(value, dict) else value
    return PipelineConfig.from_dict(data)


@pytest.fixture(scope="session")
def small_config_factory(synth_resources):
    return lambda **kw: small_config(synth_resources, **kw)


@pytest.fixture(scope="session")
def small_dataset():
    # uniform levels so every class appears in every fold
    return gen_synthetic((1 / 6,) * 6, n=180, seed=11)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
