import json

import numpy as np
import pytest

from covlab import corpus
from covlab import functions as fn
from covlab.ioutil import ConfigError, dumps
from covlab.measures import (
    Gaussian,
    GaussianScaleMixture,
    ProductMeasure,
    Uniform,
)
from covlab.theorem_suite import (
    DEFAULT_SUITE_IDS,
    VERDICT_FAIL,
    VERDICT_HYP,
    VERDICT_INCONCLUSIVE,
    VERDICT_PASS,
    check,
    check_instance,
    coord_increase_probes,
    run_suite,
    theorem_ids,
)


def gaussian1():
    return ProductMeasure([Gaussian(0.0, 1.0)])


def convex_pair():
    f = fn.quadratic([[2.0]], b=[0.3]).with_declared("convex")
    g = fn.softplus([1.0]).with_declared("convex")
    return f, g


def test_theorem_registry():
    ids = theorem_ids()
    assert len(ids) == len(set(ids)) == 20
    assert set(DEFAULT_SUITE_IDS) <= set(ids)
    with pytest.raises(ConfigError):
        check("T9.9", gaussian1())


def test_report_shape():
    f, g = convex_pair()
    rep = check("T1.2.1", gaussian1(), f, g, seed=4)
    out = rep.to_json()
    assert list(out)[:2] == ["theorem_id", "hypotheses"]
    assert out["verdict"] == VERDICT_PASS
    assert out["seed"] == 4
    assert out["tolerance"] >= 1e-6
    assert {h["verdict"] for h in out["hypotheses"]} == {"pass"}
    assert out["quadrature"]["order"] == 64
    # the whole report serializes deterministically
    assert dumps(out) == dumps(check("T1.2.1", gaussian1(), f, g, seed=4).to_json())


def test_linear_equality_case():
    """Linear f, g make the one-dimensional bound an identity; margin
    sits at roundoff and either verdict that is not FAIL is honest."""
    f = fn.linear([1.3], c=0.2)
    g = fn.linear([-0.4], c=1.0)
    rep = check("T1.2.1", ProductMeasure([Uniform(-1.0, 2.0)]), f, g)
    assert abs(rep.margin) <= 1e-9
    assert rep.verdict in (VERDICT_PASS, VERDICT_INCONCLUSIVE)


def test_gaussian_dim1_specializations_agree():
    """On the standard Gaussian line the general convex bound and the
    any-measure bound state the same inequality (Var = 1)."""
    f, g = convex_pair()
    rep_gauss = check("T1.1.1", gaussian1(), f, g)
    rep_any = check("T1.2.1", gaussian1(), f, g)
    assert rep_gauss.verdict == rep_any.verdict == VERDICT_PASS
    assert rep_gauss.margin == pytest.approx(rep_any.margin, abs=1e-9)


def test_hypothesis_failure_is_not_a_fail():
    """A non-convex g trips the hypothesis check and the inequality is
    never evaluated against the tolerance."""
    f, _ = convex_pair()
    g = fn.polynomial1d([0.0, 0.0, 0.0, 1.0])  # x^3, not convex
    rep = check("T1.2.1", gaussian1(), f, g)
    assert rep.verdict == VERDICT_HYP
    assert not rep.failed
    failed = [h for h in rep.hypotheses if not h.passed]
    assert failed and failed[0].name == "g convex"
    assert failed[0].witness is not None


def test_t122_analytic_case():
    """Cov(e^{-x^2}, x^2) under the standard Gaussian is negative and the
    checker reports the oriented margin."""
    f = fn.exp_neg_quadratic([[2.0]])
    g = fn.quadratic([[2.0]])
    rep = check("T1.2.2", gaussian1(), f, g)
    want = 3.0 ** -1.5 - 3.0 ** -0.5
    assert rep.verdict == VERDICT_PASS
    assert rep.lhs == pytest.approx(want, abs=1e-6)
    assert rep.margin == pytest.approx(-want, abs=1e-6)


def test_t13_unit_weights_match_corollary():
    inst = corpus.instance("C1.4", 3)
    rep_t13 = check("T1.3", inst.measure, inst.f, inst.g, weights=None,
                    seed=inst.seed)
    rep_c14 = check("C1.4", inst.measure, inst.f, inst.g, seed=inst.seed)
    a = rep_t13.to_json()
    b = rep_c14.to_json()
    a.pop("theorem_id")
    b.pop("theorem_id")
    assert dumps(a) == dumps(b)


def test_unit_weight_corollaries_reject_weights():
    inst = corpus.instance("T1.3", 0)
    weights = inst.weights or [None]
    for tid in ("C1.4", "C1.10"):
        with pytest.raises(ConfigError):
            check(tid, inst.measure, inst.f, inst.g, weights=weights)


def test_t15_needs_an_unconditional_function():
    mu = ProductMeasure([Gaussian(0.0, 1.0), Gaussian(0.0, 1.0)])
    f = fn.quadratic([[1.0, 0.5], [0.5, 1.0]])  # even but not unconditional
    rep = check("T1.5", mu, f, f)
    assert rep.verdict == VERDICT_HYP
    names = [h.name for h in rep.hypotheses if not h.passed]
    assert "f or g unconditional" in names


def test_ex91_requires_options_not_functions():
    mu = ProductMeasure([Gaussian(0.0, 1.0)])
    with pytest.raises(ConfigError):
        check("EX9.1", mu, options={"beta": 1.0})  # alpha missing
    with pytest.raises(ConfigError):
        check("EX9.1", mu, f=fn.linear([1.0]),
              options={"alpha": 1.0, "beta": 2.0})
    rep = check("EX9.1", mu, options={"alpha": 0.5, "beta": 2.0})
    assert rep.verdict == VERDICT_PASS


def test_ex92_rejects_negative_tilt():
    mu = ProductMeasure([Uniform(-1.0, 1.0), Uniform(-1.0, 1.0)])
    rep = check("EX9.2", mu, options={"J": -0.5, "theta": [1.0, 1.0]})
    assert rep.verdict == VERDICT_HYP
    ok = check("EX9.2", mu, options={"J": 0.4, "theta": [1.0, 0.5]})
    assert ok.verdict == VERDICT_PASS


def test_scale_invariance_of_verdicts():
    """Scaling f and g by a positive constant rescales the margin but never
    moves a clear PASS across the tolerance."""
    for c in (0.5, 3.0):
        for k in range(5):
            inst = corpus.instance("T1.2.1", k)
            rep = check_instance(corpus.scaled(inst, c))
            assert rep.verdict == VERDICT_PASS, (c, k, rep.margin)


def test_ta1_mixture_case():
    mu = ProductMeasure([GaussianScaleMixture([(0.6, 0.5), (1.5, 0.5)])])
    f = fn.exp_neg_quadratic([[1.0]])
    g = fn.quadratic([[1.0]])
    rep = check("TA.1", mu, f, g)
    assert rep.verdict == VERDICT_PASS
    assert rep.lhs <= 0  # the covariance itself is nonpositive


def test_coord_increase_probes_directions():
    g = fn.quadratic([[1.0, 0.2], [0.2, 1.0]]).with_declared("convex")
    out = coord_increase_probes(g, 2, sigma_lo=0.7, sigma_hi=1.4, n_sigma=4)
    assert out["min_diff"] >= -1e-6 * (1 + out["scale"])
    f = fn.sech_prod([1.0, 1.0])
    out_f = coord_increase_probes(f, 2, sigma_lo=0.7, sigma_hi=1.4, n_sigma=4)
    assert out_f["max_diff"] <= 1e-6 * (1 + out_f["scale"])


def test_corpus_checks_pass_per_theorem():
    for tid in DEFAULT_SUITE_IDS:
        rep = check_instance(corpus.instance(tid, 0, seed=9))
        assert rep.verdict == VERDICT_PASS, (tid, rep.to_json())


def test_run_suite_small():
    res = run_suite({"seed": 5, "instances": 2,
                     "theorems": ["T1.2.1", "EX9.1"]})
    assert res.summary["total"] == 4
    assert res.summary["fail_count"] == 0
    assert res.exit_code == 0
    assert [r.theorem_id for r in res.reports] == ["T1.2.1"] * 2 + ["EX9.1"] * 2
    again = run_suite({"seed": 5, "instances": 2,
                       "theorems": ["T1.2.1", "EX9.1"]})
    assert dumps(res.to_json()) == dumps(again.to_json())


def test_run_suite_rejects_bad_config():
    with pytest.raises(ConfigError):
        run_suite({"instanses": 3})
    with pytest.raises(ConfigError):
        run_suite({"theorems": ["T0.0"]})


def test_run_suite_mutant_flips_to_fail():
    """The self-test mutant negates every computed margin, so clear passes
    must come back as FAIL with a nonzero exit code."""
    res = run_suite({"seed": 5, "instances": 2, "theorems": ["T1.2.1"],
                     "mutant_sign_flip": True})
    assert res.summary["fail_count"] > 0
    assert res.exit_code == 1
    assert any(r.verdict == VERDICT_FAIL for r in res.reports)


def test_thread_env_is_validated(monkeypatch):
    monkeypatch.setenv("COVLAB_THREADS", "many")
    with pytest.raises(ConfigError):
        run_suite({"seed": 1, "instances": 1, "theorems": ["T1.2.1"]})
    monkeypatch.setenv("COVLAB_THREADS", "2")
    res = run_suite({"seed": 1, "instances": 1, "theorems": ["T1.2.1"]})
    assert res.summary["fail_count"] == 0
