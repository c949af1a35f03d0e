"""实验"""
import numpy as np
import pytest

from models.ensemble import EnsembleConfig, MCMCSettings, SamplerMethod
from models.run_config import RunConfig
from services.experiments import ExperimentContext, registry
from services.experiments.clt import (
    CLTGates,
    clt_logfield,
    finite_n_log_ratios,
    limit_reference,
    mean_shift,
    predicted_covariances,
)
from services.experiments.edge_tail import edge_tail
from services.experiments.gustavsson import GustavssonGates, default_indices, finite_n_b, gustavsson, limit_b
from services.experiments.local_law import default_etas, local_law_scan
from services.experiments.loops import verify_loop_rank1, verify_loop_rankn
from services.experiments.quadratures import get_function
from services.experiments.rigidity import rigidity_profile, rigidity_statistic
from services.experiments.smooth_clt import smooth_clt
from services.experiments.wegner import WegnerParams, wegner_scan
from services.oracle import OracleSpec
from services.sampler import run_chains
from utils.exceptions import ConfigError, ExperimentError, UnderpoweredError


def gue(quadratic, N, samples, seed=0, beta=2.0, chains=1):
    return run_chains(EnsembleConfig(beta=beta, N=N, potential=quadratic), chains, samples, seed=seed)


# ============================================
# 注册表
# ============================================

def test_registry_contains_all_experiments():
    assert set(registry.get_experiment_ids()) == {
        "verify-loops",
        "local-law",
        "rigidity",
        "edge-tail",
        "wegner",
        "clt",
        "gustavsson",
        "smooth-clt",
    }
    assert registry.get("nope") is None
    assert all(e.claim for e in registry.get_all())


def test_params_errors_name_the_key():
    with pytest.raises(ConfigError, match="params.unknown"):
        registry.get("wegner").parse_params({"unknown": 1})
    with pytest.raises(ConfigError, match="params.margin"):
        registry.get("wegner").parse_params({"margin": -1})


# ============================================
# loop 方程
# ============================================

@pytest.mark.parametrize("beta", [1.0, 2.0, 4.0])
def test_loops_via_oracle(quadratic, semicircle, beta):
    spec = OracleSpec(beta=beta, N=2, potential=quadratic)
    report = verify_loop_rank1(spec, semicircle, [0.3 + 0.5j, 1j])
    verify_loop_rankn(spec, semicircle, 1j, [2j], report)
    assert report.passed, report.summary()
    assert len(report.gated_rows) == 6


def test_loops_via_oracle_quartic(quartic, quartic_measure):
    spec = OracleSpec(beta=1.0, N=2, potential=quartic)
    report = verify_loop_rank1(spec, quartic_measure, [0.2 + 0.7j])
    assert report.passed, report.summary()


def test_loops_monte_carlo(quadratic, semicircle):
    samples = gue(quadratic, 32, 400, seed=5)
    report = verify_loop_rank1(samples, semicircle, [0.3 + 0.5j, 1j])
    verify_loop_rankn(samples, semicircle, 1j, [0.5 + 1j], report)
    assert report.passed, report.summary()
    assert any(r.quantity == "s_minus_mV.abs" for r in report.rows)


def test_loops_reject_real_points(quadratic, semicircle):
    with pytest.raises(ValueError):
        verify_loop_rank1(OracleSpec(beta=2.0, N=2, potential=quadratic), semicircle, [0.5])
    with pytest.raises(ValueError):
        verify_loop_rankn(OracleSpec(beta=2.0, N=2, potential=quadratic), semicircle, 1j, [])


# ============================================
# 局部律、刚性、谱边、Wegner
# ============================================

def test_default_etas():
    etas = default_etas(1000)
    assert len(etas) == 6
    assert etas[0] == pytest.approx(0.004)
    assert etas[-1] == pytest.approx(0.256)
    ratios = np.diff(np.log(etas))
    assert ratios == pytest.approx(np.full(5, np.log(64.0) / 5))


def test_wegner_default_deltas():
    assert WegnerParams().deltas == [0.5, 0.2, 0.1, 0.05]


def test_local_law_requires_points(gue_small, semicircle):
    with pytest.raises(ExperimentError):
        local_law_scan(gue_small, semicircle, 0.0, [0.1, 0.2])
    with pytest.raises(ValueError):
        local_law_scan(gue_small, semicircle, 0.0, [0.1, 0.2, 0.3, 0.9])


def test_local_law_rows(gue_small, semicircle):
    report = local_law_scan(gue_small, semicircle, 0.0, [0.05, 0.1, 0.2, 0.4])
    moments = [r.estimated for r in report.rows if r.quantity == "moment2"]
    assert len(moments) == 4
    assert moments == sorted(moments, reverse=True)
    assert report.rows[-1].quantity == "slope"


def test_rigidity_statistic_zero_at_quantiles(semicircle):
    N = 20
    lam = np.array(semicircle.quantiles(N))[None, :]
    assert rigidity_statistic(lam, semicircle, 0.1)[0] == pytest.approx(0.0, abs=1e-10)


def test_rigidity_profile(quadratic, semicircle):
    sets = {N: gue(quadratic, N, 100, seed=N) for N in (64, 128)}
    report = rigidity_profile(sets, semicircle)
    constants = [r for r in report.rows if r.quantity == "constant"]
    assert [r.inputs["N"] for r in constants] == [64, 128]
    assert report.rows[-1].quantity == "max_ratio"
    with pytest.raises(ValueError):
        rigidity_profile(sets, semicircle, bulk_fraction=0.6)


def test_edge_tail_monotone(quadratic, semicircle):
    samples = gue(quadratic, 64, 400, seed=2)
    report = edge_tail(samples, semicircle, [0.0, 0.5, 1.0, 2.0, 4.0])
    survival = [r.estimated for r in report.rows if r.quantity == "survival"]
    assert survival == sorted(survival, reverse=True)
    for row in (r for r in report.rows if r.quantity == "survival"):
        assert row.inputs["wilson_low"] <= row.estimated + 1e-12
        assert row.estimated <= row.inputs["wilson_high"] + 1e-12
    with pytest.raises(ValueError):
        edge_tail(samples, semicircle, [-1.0])


def test_wegner_scan(quadratic, semicircle):
    samples = gue(quadratic, 128, 300, seed=8)
    report = wegner_scan(samples, semicircle, 0.0, [0.5, 0.2, 0.1, 0.05])
    means = [r.estimated for r in report.rows if r.quantity == "mean_count"]
    assert len(means) == 4
    # E 𝒩(I) ≈ N ρ(E) · 2δℓ(E)
    ell = semicircle.scales(0.0, 128).ell
    assert means[0] == pytest.approx(128 * float(semicircle.density(0.0)) * 2 * 0.5 * ell, abs=0.1)
    assert report.passed, report.summary()
    with pytest.raises(ValueError):
        wegner_scan(samples, semicircle, 0.0, [0.1, 0.2])


# ============================================
# CLT
# ============================================

def test_mean_shift(semicircle):
    assert mean_shift(semicircle, 0.0, 1000, 2.0) == 0.0
    assert mean_shift(semicircle, 0.0, 1000, 1.0) == pytest.approx(0.25 * np.log(2.0))
    # 谱边处 κ 被 N^{-2/3} 截断
    assert mean_shift(semicircle, 2.0, 1000, 1.0) == pytest.approx(0.25 * np.log(0.01))


def test_predicted_covariances(semicircle):
    re_re, im_im, discrepancy = predicted_covariances(semicircle, [-1.0, 0.0, 1.0], 1000, 2.0)
    assert np.allclose(im_im, im_im.T)
    assert np.all(np.diag(im_im) > 0)
    assert re_re[0, 2] == pytest.approx(-np.log(2.0) / 2, abs=1e-4)
    assert discrepancy.shape == (3, 3)


def test_log_ratios_and_limits(semicircle):
    a, b = finite_n_log_ratios(semicircle, [0.0, 1.0], 4096)
    assert a[0, 0] == pytest.approx(1 + np.log(np.sqrt(2)) / np.log(4096))
    assert b[0, 1] == pytest.approx(np.log(2) / np.log(4096))
    limits = limit_reference(semicircle, [0.0, 2.0])
    assert limits["a"] == [[1.0, 0.0], [0.0, pytest.approx(2 / 3)]]
    assert limits["b"][1][1] == 0.0


def test_clt_requires_samples(gue_small, semicircle):
    with pytest.raises(UnderpoweredError):
        clt_logfield(gue_small, semicircle, [0.0])
    with pytest.raises(ValueError):
        clt_logfield(gue_small, semicircle, [3.0], min_samples=1)


def test_clt_report_structure(gue_small, semicircle):
    report = clt_logfield(gue_small, semicircle, [0.0, 1.0], min_samples=100)
    gates = {}
    for row in report.rows:
        gates.setdefault(row.quantity, set()).add(row.gate)
    assert gates["var.im.normalized"] == {"[0.7,1.3]"}
    assert gates["cov.re_im.normalized"] == {"[-0.1,0.1]"}
    assert gates["cov.im_im.normalized"] == {"[-0.15,0.15]"}
    assert gates["mean.re"] == {"|z|<=4"}
    assert gates["cov.re_re.normalized"] == {""}
    # β = 2 时 δ = 0，没有符号行
    assert "mean.re.sign" not in gates
    assert len([r for r in report.rows if r.quantity == "cov.re_im.normalized"]) == 4
    assert "limit_reference" in report.notes
    assert np.asarray(report.notes["finite_n_b"]).shape == (2, 2)


def test_clt_nearby_energies_not_gated(gue_small, semicircle):
    report = clt_logfield(gue_small, semicircle, [0.0, 0.2], min_samples=100)
    rows = [r for r in report.rows if r.quantity == "cov.im_im.normalized"]
    assert len(rows) == 1
    assert rows[0].gate == ""
    assert rows[0].predicted is not None


def test_clt_sign_row_for_beta_one(quadratic, semicircle):
    samples = gue(quadratic, 32, 200, seed=17, beta=1.0)
    report = clt_logfield(samples, semicircle, [0.0], min_samples=100)
    (row,) = [r for r in report.rows if r.quantity == "mean.re.sign"]
    # κ(0) = 2，δ = ¼ log 2 > 0
    assert row.gate == "sign=+"
    assert row.passed == (row.estimated > 0)


def test_clt_gates_validated():
    with pytest.raises(ValueError):
        CLTGates(var_window=(1.3, 0.7))
    with pytest.raises(ConfigError, match="params.var_window"):
        registry.get("clt").parse_params({"var_window": [1.3, 0.7]})
    params = registry.get("clt").parse_params({"re_im_max": 0.2})
    assert params.gates().re_im_max == 0.2
    assert params.gates().var_window == (0.7, 1.3)


def test_gustavsson_b_matrices(semicircle):
    b = finite_n_b(semicircle, [100, 110], 200)
    assert b[0, 0] > b[0, 1] > 0
    np.testing.assert_allclose(b, b.T)
    limit = limit_b([100, 110], 200)
    assert limit[0, 0] == 1.0
    assert limit[0, 1] == pytest.approx(1 - np.log(10) / np.log(200))


def test_gustavsson_validation(gue_small, semicircle):
    with pytest.raises(ValueError):
        gustavsson(gue_small, semicircle, [1], min_samples=1)
    with pytest.raises(UnderpoweredError):
        gustavsson(gue_small, semicircle, [16])


def test_gustavsson_default_indices(semicircle):
    # F(1) = 1/2 + √3/(4π) + 1/6 ≈ 0.80，第三个下标的经典位置约在 1 处
    indices = default_indices(semicircle, 32)
    assert indices[:2] == [16, 17]
    assert len(indices) == 3
    assert semicircle.quantile(indices[2], 32) == pytest.approx(1.0, abs=0.1)
    assert default_indices(semicircle, 4)[:1] == [2]


def test_gustavsson_gates(gue_small, semicircle):
    report = gustavsson(gue_small, semicircle, [16, 17, 26], min_samples=1)
    var_rows = [r for r in report.rows if r.quantity == "var"]
    assert [r.gate for r in var_rows] == ["[0.7,1.3]"] * 3
    assert all(r.predicted is not None for r in var_rows)

    corr = {(r.inputs["n_i"], r.inputs["n_j"]): r for r in report.rows if r.quantity == "corr"}
    assert corr[(16, 17)].gate == "[0.9,inf]"
    assert corr[(16, 26)].gate == "[-0.15,0.15]"
    assert corr[(17, 26)].gate == "[-0.15,0.15]"
    assert all(r.gate == "" for r in report.rows if r.quantity == "cov")
    assert report.notes["gates"] == GustavssonGates().model_dump()


def test_gustavsson_close_indices_report_only(gue_small, semicircle):
    report = gustavsson(gue_small, semicircle, [14, 16], min_samples=1)
    (row,) = [r for r in report.rows if r.quantity == "corr"]
    assert row.gate == ""
    assert row.predicted is not None


def test_smooth_clt_trace_law(quadratic, semicircle):
    # tr H 在有限 N 时恰为 N(0, 2/β)
    samples = gue(quadratic, 32, 1000, seed=13)
    report = smooth_clt(samples, semicircle, get_function("x"))
    assert report.passed, report.summary()
    assert report.notes["sigma2"] == pytest.approx(1.0, abs=1e-8)
    assert len([r for r in report.rows if r.quantity == "log_mgf"]) == 4


def test_context_caches_sample_sets(quadratic):
    run = RunConfig(N=8, samples=5)
    context = ExperimentContext(run=run)
    assert context.sample_set() is context.sample_set(8)
    assert context.measure is context.measure


def test_execute_echoes_config():
    run = RunConfig(N=2, experiment="verify-loops", params={"z_points": [[0.0, 1.0]]})
    report = registry.get("verify-loops").execute(ExperimentContext(run=run))
    assert report.config["params"]["z_points"] == [[0.0, 1.0]]
    assert report.notes["source"] == "oracle"
    assert report.passed


# ============================================
# 验收规模（耗时较长）
# ============================================

@pytest.mark.slow
@pytest.mark.parametrize("beta", [1.0, 2.0])
def test_loops_acceptance(quadratic, semicircle, beta):
    samples = gue(quadratic, 512, 2000, seed=7, beta=beta)
    report = verify_loop_rank1(samples, semicircle, [0.3 + 0.5j, 1j, -1.0 + 0.5j])
    verify_loop_rankn(samples, semicircle, 1j, [2j], report)
    assert report.passed, report.summary()


@pytest.mark.slow
def test_local_law_acceptance(quadratic, semicircle):
    N = 1024
    samples = gue(quadratic, N, 2000, seed=1)
    etas = default_etas(N)
    report = local_law_scan(samples, semicircle, 0.0, etas)
    assert report.passed, report.summary()


@pytest.mark.slow
def test_wegner_acceptance(quadratic, semicircle):
    samples = gue(quadratic, 1024, 1000, seed=3)
    report = wegner_scan(samples, semicircle, 0.0, [0.5, 0.2, 0.1, 0.05])
    assert report.passed, report.summary()


@pytest.mark.slow
def test_edge_tail_acceptance(quadratic, semicircle):
    samples = gue(quadratic, 256, 4000, seed=4)
    report = edge_tail(samples, semicircle, [0.0, 0.5, 1.0, 2.0, 4.0])
    assert report.passed, report.summary()


@pytest.mark.slow
def test_smooth_clt_mala(quadratic, semicircle):
    config = EnsembleConfig(
        beta=1.0,
        N=16,
        potential=quadratic,
        method=SamplerMethod.MALA,
        mcmc=MCMCSettings(burn_in_sweeps=1000, thinning_sweeps=20),
    )
    samples = run_chains(config, 4, 500, seed=19, measure=semicircle)
    report = smooth_clt(samples, semicircle, get_function("x"), ts=())
    assert report.passed, report.summary()
    assert "effective_sample_size" in report.notes


@pytest.mark.slow
def test_rigidity_acceptance(quadratic, semicircle):
    sets = {N: gue(quadratic, N, 500, seed=N) for N in (256, 512, 1024, 2048)}
    report = rigidity_profile(sets, semicircle)
    assert report.passed, report.summary()


@pytest.fixture(scope="module")
def gue_4096(quadratic):
    return gue(quadratic, 4096, 2000, seed=23)


def rows_of(report, quantity, **inputs):
    return [
        r for r in report.rows
        if r.quantity == quantity and all(r.inputs.get(k) == v for k, v in inputs.items())
    ]


@pytest.mark.slow
def test_clt_acceptance(gue_4096, semicircle):
    report = clt_logfield(gue_4096, semicircle, [0.0, 1.0])
    (var,) = rows_of(report, "var.im.normalized", E=0.0)
    assert var.passed, var
    (mean,) = rows_of(report, "mean.re", E=0.0)
    assert mean.passed, mean
    re_im = rows_of(report, "cov.re_im.normalized")
    assert len(re_im) == 4
    assert all(r.passed for r in re_im), re_im
    (separated,) = rows_of(report, "cov.im_im.normalized")
    assert separated.gate and separated.passed, separated


@pytest.mark.slow
def test_clt_mean_shift_sign_acceptance(quadratic, semicircle):
    samples = gue(quadratic, 1024, 2000, seed=29, beta=1.0)
    report = clt_logfield(samples, semicircle, [0.0])
    (sign,) = rows_of(report, "mean.re.sign")
    assert sign.gate == "sign=+"
    assert sign.passed, sign
    (mean,) = rows_of(report, "mean.re")
    assert mean.passed, mean


@pytest.mark.slow
def test_gustavsson_acceptance(gue_4096, semicircle):
    N = 4096
    indices = default_indices(semicircle, N)
    report = gustavsson(gue_4096, semicircle, indices)
    (var,) = rows_of(report, "var", n_i=N // 2, n_j=N // 2)
    assert var.passed, var
    (separated,) = rows_of(report, "corr", n_i=N // 2, n_j=indices[2])
    assert separated.gate == "[-0.15,0.15]"
    assert separated.passed, separated
    # 相邻下标的相关系数在 N = 4096 时接近有限 N 的预测 b12/b11 ≈ 0.84，仍低于渐近门限
    (adjacent,) = rows_of(report, "corr", n_i=N // 2, n_j=N // 2 + 1)
    assert adjacent.gate == "[0.9,inf]"
    assert adjacent.estimated == pytest.approx(adjacent.predicted, abs=0.1)
