import pytest
from hypothesis import given, strategies as st

from mcautotune.model import (ConfigError, PlatformConfig, ProblemSpec, TuningParams,
                              derive_launch, enumerate_configs, feasible, feasible_configs)

P = PlatformConfig()

sizes = st.integers(2, 11).map(lambda n: 2**n)
platforms = st.builds(PlatformConfig, nd=st.integers(1, 4), nu=st.integers(1, 4),
                      np=st.integers(0, 4).map(lambda k: 2**k), gmt=st.integers(1, 8))


def test_launch_large():
    assert derive_launch(P, 1024, TuningParams(16, 32)) == (
        derive_launch(P, 1024, TuningParams(16, 32)).__class__(2, 1, 1, 4, 4))


def test_launch_clamps_empty_grid():
    plan = derive_launch(P, 8, TuningParams(4, 4))
    assert (plan.wgs, plan.nwd, plan.nwu, plan.nwe, plan.all_nwe) == (1, 1, 1, 4, 4)


def test_launch_wg_above_np():
    plan = derive_launch(P, 16, TuningParams(8, 2))
    assert (plan.wgs, plan.nwe, plan.all_nwe) == (1, 4, 4)


def test_launch_rejects_bad_params():
    with pytest.raises(ConfigError):
        derive_launch(P, 8, TuningParams(3, 2))
    with pytest.raises(ConfigError):
        derive_launch(P, 8, TuningParams(8, 2))


def test_enumerate():
    assert enumerate_configs(8) == [TuningParams(2, 2), TuningParams(2, 4),
                                    TuningParams(4, 2), TuningParams(4, 4)]
    assert enumerate_configs(4) == [TuningParams(2, 2)]
    big = enumerate_configs(1024)
    assert len(big) == 81 and TuningParams(16, 32) in big


@pytest.mark.parametrize("kw", [dict(np=3), dict(nd=0), dict(gmt=0), dict(nu=-1)])
def test_platform_validation(kw):
    with pytest.raises(ConfigError):
        PlatformConfig(**kw)


def test_problem_validation():
    with pytest.raises(ConfigError):
        ProblemSpec(6)
    with pytest.raises(ConfigError):
        ProblemSpec(8, kernel="sum")
    with pytest.raises(ConfigError):
        ProblemSpec(4, kernel="minimum", input=[1, 2, 3])
    with pytest.raises(ConfigError):
        ProblemSpec(4, input=[1, 2, 3, 4])
    assert ProblemSpec(4, kernel="minimum").input == (4, 3, 2, 1)


def test_minimum_feasibility():
    prob = ProblemSpec(8, kernel="minimum")
    assert not feasible(prob, TuningParams(4, 4))
    assert TuningParams(4, 4) not in feasible_configs(prob)
    assert feasible(ProblemSpec(8), TuningParams(4, 4))


@given(sizes, platforms)
def test_every_config_launches(size, plat):
    for cfg in enumerate_configs(size):
        plan = derive_launch(plat, size, cfg)
        assert 1 <= plan.all_nwe <= plat.nd * plat.nu * plat.np
        assert plan.wgs >= 1 and plan.nwe == min(cfg.wg, plat.np)


@given(sizes)
def test_enumeration_count_and_order(size):
    cfgs = enumerate_configs(size)
    n = size.bit_length() - 1
    assert len(cfgs) == (n - 1) ** 2
    assert cfgs == sorted(cfgs)
