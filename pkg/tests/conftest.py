"""Shared expensive ensembles; each is built once per session and reused across test files."""
import json

import pytest

from stable_she import harness
from stable_she.config import parse_config

# every desk-scale experiment uses this seed
SEED = 1
Y_TIMES = (0.1, 0.2, 0.25, 0.3, 0.4)

_ACCEPTANCE_LINES = []


def record_acceptance(line: str):
    """Collect a PASS/FAIL line for the terminal summary."""
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def config(experiment: str, **extra):
    return parse_config(json.dumps({"experiment": experiment, "seed": SEED, **extra}))


@pytest.fixture(scope="session")
def noise_cfg():
    return config("noise-check")


@pytest.fixture(scope="session")
def noise_draws(noise_cfg):
    """100000 truncated noise increments, volume 1, cutoff 1e-4."""
    c = noise_cfg
    return harness.noise_samples(c.noise.t * c.noise.area, c.noise.eps, c.model.alpha, c.replicas, c.seed)


@pytest.fixture(scope="session")
def y_paths():
    """2000 stable-noise replicas from the unit Gaussian, tracking the unit Gaussian test function."""
    c = config("moments-martingale")
    return harness.simulate_y_ensemble(c.phi, c.model, Y_TIMES, c.replicas, c.seed, psi=c.psi)


@pytest.fixture(scope="session")
def gap_result(y_paths):
    c = config("duality-gap")
    return harness.run_gap_experiment(c, y_paths=y_paths, keep_trajectories=True)
