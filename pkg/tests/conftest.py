import functools
from dataclasses import replace

import pytest

from lambda_store.field import Grid
from lambda_store.model import DecayRates, MediumSpec, paper_medium
from lambda_store.pulses import ControlSchedule, ProbeSpec, PulseSchedule, SwitchEvent
from lambda_store.scenario import ScenarioConfig, preset, run_scenario, with_grid

LEVEL = 1.2e-9


def reduced_medium(gamma_zero=False):
    """Reference medium at 1/100 of the density, so a 21-point grid resolves it."""
    m = paper_medium()
    m = MediumSpec(m.levels, m.decays, m.N / 100, m.L)
    if gamma_zero:
        m = m.with_decays(DecayRates(0.0, 0.0, 0.0, 0.0))
    return m


def reduced_schedule(switch=True, probe_t2=4e9):
    probe = ProbeSpec(1e-10, 0.0, probe_t2)
    if not switch:
        return PulseSchedule(probe, ControlSchedule(LEVEL), ControlSchedule(0.0))
    return PulseSchedule(
        probe,
        ControlSchedule(LEVEL, (SwitchEvent(3e9, "off", 5e8),)),
        ControlSchedule(LEVEL, (SwitchEvent(5e9, "on", 5e8),)),
    )


def reduced_config(switch=True, nz=21, nt=500, dt=2e7, medium=None, kind="custom", **kw):
    medium = reduced_medium() if medium is None else medium
    return ScenarioConfig(medium, Grid(nz, dt, nt, medium.L), reduced_schedule(switch),
                          kind, record_every=25, **kw)


@functools.lru_cache(maxsize=None)
def _cached_run(kind, nz, dt, gamma_zero, shift):
    cfg = preset(kind)
    if gamma_zero:
        cfg = replace(cfg, medium=cfg.medium.with_decays(DecayRates(0.0, 0.0, 0.0, 0.0)))
    if shift:
        c4 = cfg.schedule.control4.shifted(shift)
        sched = replace(cfg.schedule, control4=c4)
        cfg = replace(cfg, schedule=sched,
                      grid=replace(cfg.grid, nt=cfg.grid.nt + int(round(max(shift, 0) / cfg.grid.dt))))
    if (nz, dt) != (cfg.grid.nz, cfg.grid.dt):
        cfg = with_grid(cfg, nz, dt)
    return run_scenario(cfg)


@pytest.fixture(scope="session")
def preset_run():
    """Memoized full-size preset runs shared by every test module."""

    def get(kind, nz=201, dt=2e7, gamma_zero=False, shift=0.0):
        return _cached_run(kind, nz, dt, gamma_zero, float(shift))

    return get


# acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when == "teardown":
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed:
        _CRITERIA[number] = ("FAIL", title, detail or str(rep.longrepr).splitlines()[-1])
    elif rep.when == "call":
        _CRITERIA[number] = ("PASS", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title} -- {detail}")
