"""Estimators and Monte Carlo oracles for the error decompositions.

Three layers live here:

* The rule-of-thumb machinery: an ensemble over m synthetic datasets removes
  a (1 - 1/m) fraction of the maximal benefit MV + SDV, so the whole error
  curve is predictable from measurements at one and two datasets (or from a
  least-squares fit over several m).

* The nested MV/SDV estimator: draw generator parameters several times, draw
  several synthetic datasets per parameter draw, train the predictor on
  each, and read the two variance components off the within/between split of
  the prediction spread.

* Verification oracles on fully specified truth processes: every term of the
  squared-error decomposition (including the DP-summary and correlated
  variants) is estimated by nested Monte Carlo from its own definition,
  the total error is estimated independently from fresh draws, and the gap
  between the two must vanish within Monte Carlo error. Standard errors come
  from a nonparametric bootstrap over the outermost replication level.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import bregman as brg
from .data import Dataset, encode
from .generators import GeneratorSpec, fit, generate_ensemble, sample
from .metrics import MEAN, MetricSpec, combine_predictions, score_predictions
from .predictors import PredictorSpec, predict_batch, train
from .processes import get_process
from .rng import child_rng, child_seed

IID = "iid"
SHARED_SUMMARY = "shared_summary"
CORRELATED = "correlated"

BOOTSTRAP_RESAMPLES = 400
TERM_SE_MULTIPLE = 3.0
IDENTITY_SE_MULTIPLE = 4.0


# --------------------------------------------------------------------------
# Rule of thumb
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RuleOfThumbFit:
    mse1: float
    mv_plus_sdv: float
    method: str                                  # "two_point" | "regression"
    slope: float | None = None
    intercept: float | None = None
    r_squared: float | None = None
    points: dict[int, float] | None = None

    @property
    def max_benefit(self) -> float:
        """Limiting improvement as m grows without bound."""
        return self.mv_plus_sdv


def fit_rule_two_point(mse1: float, mse2: float) -> RuleOfThumbFit:
    """Estimate MV + SDV = 2 (MSE_1 - MSE_2) from errors at m = 1 and m = 2.

    A negative value diagnoses estimation noise (or a generator outside the
    i.i.d. setting) and is returned as-is.
    """
    return RuleOfThumbFit(mse1=float(mse1), mv_plus_sdv=float(2.0 * (mse1 - mse2)),
                          method="two_point")


def fit_rule_regression(points: dict[int, float]) -> RuleOfThumbFit:
    """Least-squares fit of measured errors against 1 - 1/m.

    The negated slope estimates MV + SDV and the intercept estimates the
    single-dataset error.
    """
    ms = sorted(points)
    if len(ms) < 2:
        raise ValueError("need at least 2 distinct m values")
    x = np.array([1.0 - 1.0 / m for m in ms])
    y = np.array([points[m] for m in ms])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = intercept + slope * x
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RuleOfThumbFit(mse1=float(intercept), mv_plus_sdv=float(-slope),
                          method="regression", slope=float(slope),
                          intercept=float(intercept), r_squared=r2,
                          points=dict(points))


def predict_mse(rule: RuleOfThumbFit, m: int) -> float:
    """Predicted error with an ensemble of m synthetic datasets."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return rule.mse1 - (1.0 - 1.0 / m) * rule.mv_plus_sdv


def achieved_benefit(rule: RuleOfThumbFit, m: int) -> float:
    """Error reduction at m datasets: a 1 - 1/m fraction of the maximal benefit."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return (1.0 - 1.0 / m) * rule.mv_plus_sdv


# --------------------------------------------------------------------------
# Nested MV/SDV estimation from synthetic data alone
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NestedVarianceEstimate:
    mv_per_point: np.ndarray
    sdv_per_point: np.ndarray
    mv: float
    sdv: float
    mv_se: float
    sdv_se: float
    r_theta: int
    s_per_theta: int
    multiclass_experimental: bool = False


def _scalar_predictions(model, x, task) -> np.ndarray:
    preds = predict_batch(model, x)
    if task == "regression":
        return preds
    if preds.shape[1] != 2:
        raise ValueError("scalar decompositions need a binary classification task")
    return preds[:, 1]


def _prediction_components(model, x, task, n_classes) -> np.ndarray:
    """(n_test, c) prediction block: one column for regression or the binary
    positive-class probability, all class probabilities for multiclass."""
    preds = predict_batch(model, x)
    if task == "regression":
        return preds[:, None]
    if n_classes == 2:
        return preds[:, 1:2]
    return preds


def estimate_mv_sdv_nested(generator: GeneratorSpec, data: Dataset,
                           predictor: PredictorSpec | str, test: Dataset,
                           r_theta: int = 32, s_per_theta: int = 5,
                           seed: int = 0) -> NestedVarianceEstimate:
    """Estimate model variance and synthetic-data variance per test point.

    Draws r_theta generator fits; for each fit draws s_per_theta synthetic
    datasets and trains the predictor on each. MV is the mean over fits of
    the within-fit prediction variance, SDV the variance across fits of the
    within-fit mean prediction. Classification predictors contribute their
    positive-class probability; with more than two classes the per-class
    variances are summed instead, which is exposed as an experimental
    variant (the scalar theory does not cover it directly).
    """
    if r_theta < 2 or s_per_theta < 2:
        raise ValueError("r_theta and s_per_theta must be >= 2")
    if isinstance(predictor, str):
        predictor = PredictorSpec(predictor, data.schema.task)
    n_rows = generator.n_synthetic if generator.n_synthetic is not None else data.n
    n_classes = data.schema.n_classes
    multiclass = predictor.task == "classification" and n_classes > 2
    width = n_classes if multiclass else 1

    preds = np.empty((r_theta, s_per_theta, test.n, width))
    for i in range(r_theta):
        params = fit(generator, data, child_seed(seed, "fit", i))
        for j in range(s_per_theta):
            ds = sample(params, n_rows, child_seed(child_seed(seed, "synth", i), "rep", j))
            fm_train = encode(ds, ds, predictor.wants_standardize)
            fm_test = encode(ds, test, predictor.wants_standardize)
            model = train(predictor, fm_train,
                          child_seed(child_seed(seed, "train", i), "rep", j))
            preds[i, j] = _prediction_components(model, fm_test.x, predictor.task,
                                                 n_classes)

    within_var = preds.var(axis=1, ddof=1).sum(axis=-1)         # (r_theta, n_test)
    mv_per_point = within_var.mean(axis=0)
    sdv_per_point = preds.mean(axis=1).var(axis=0, ddof=1).sum(axis=-1)
    mv = float(mv_per_point.mean())
    sdv = float(sdv_per_point.mean())
    mv_se = float(within_var.mean(axis=1).std(ddof=1) / math.sqrt(r_theta))
    sdv_se = sdv * math.sqrt(2.0 / (r_theta - 1))
    return NestedVarianceEstimate(mv_per_point=mv_per_point, sdv_per_point=sdv_per_point,
                                  mv=mv, sdv=sdv, mv_se=mv_se, sdv_se=sdv_se,
                                  r_theta=r_theta, s_per_theta=s_per_theta,
                                  multiclass_experimental=multiclass)


# --------------------------------------------------------------------------
# Oracle decomposition on truth processes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloConfig:
    r_real: int = 100
    r_theta: int = 20
    r_syn: int = 10
    r_y: int = 1000
    r_summary: int | None = None     # defaults to r_theta in shared-summary mode

    def __post_init__(self):
        counts = [self.r_real, self.r_theta, self.r_syn, self.r_y]
        if self.r_summary is not None:
            counts.append(self.r_summary)
        if any(c < 2 for c in counts):
            raise ValueError("all Monte Carlo counts must be >= 2")

    @property
    def summaries(self) -> int:
        return self.r_summary if self.r_summary is not None else self.r_theta


@dataclass(frozen=True)
class TermEstimate:
    value: float
    std_error: float

    def within(self, target: float, multiple: float = TERM_SE_MULTIPLE) -> bool:
        return abs(self.value - target) <= multiple * self.std_error


@dataclass(frozen=True)
class DecompositionReport:
    terms: dict[str, TermEstimate]
    identity_gap: float
    identity_gap_se: float
    status: str
    config: dict
    coverage: dict
    per_point: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("mv", "sdv", "rdv", "dpvar"):
            est = self.terms.get(name)
            if est is not None and est.value < -TERM_SE_MULTIPLE * est.std_error:
                raise ValueError(f"variance term {name} = {est.value} is more than "
                                 f"{TERM_SE_MULTIPLE} standard errors below zero")

    def to_json_dict(self) -> dict:
        return {
            "terms": {k: {"value": v.value, "std_error": v.std_error}
                      for k, v in self.terms.items()},
            "identity_gap": self.identity_gap,
            "identity_gap_se": self.identity_gap_se,
            "status": self.status,
            "config": self.config,
            "coverage": self.coverage,
            "per_point": {k: list(map(float, v)) for k, v in self.per_point.items()},
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def _gauss_coverage(k: float) -> float:
    return math.erf(k / math.sqrt(2.0))


def _identity_gap(stats: dict, m: int, noise: float, mode: str):
    """Gap between the direct error estimate and the sum of estimated terms."""
    mv, sdv = stats["mv"], stats["sdv"]
    total = mv / m + sdv / m + stats["rdv"] + stats["bias_sq"] + noise
    if mode == SHARED_SUMMARY:
        total = total + stats["dpvar"]
    if mode == CORRELATED:
        total = total + (1.0 - 1.0 / m) * stats["cov"]
    return stats["mse"] - total


def _assemble(records: dict, mode: str, mc: MonteCarloConfig, f_value, idx=None) -> dict:
    """Turn per-replicate records into (bias-corrected) term estimates.

    records holds arrays indexed by outer replicate along axis 0; idx selects
    a bootstrap resample when given. Sample variances across replicates are
    corrected for the within-replicate estimation noise so every estimator is
    unbiased for its term.
    """
    def take(name):
        arr = records[name]
        return arr if idx is None else arr[idx]

    out = {}
    mv = take("mv").mean(axis=0)
    sdv_raw = take("sdv_raw").mean(axis=0)
    out["mv"] = mv
    out["sdv"] = sdv_raw - mv / mc.r_syn
    b = take("b")
    if mode == SHARED_SUMMARY:
        dpv_raw = take("dpv_raw").mean(axis=0)
        out["dpvar"] = dpv_raw - sdv_raw / mc.r_theta
        out["rdv"] = b.var(axis=0, ddof=1) - dpv_raw / mc.summaries
    else:
        out["rdv"] = b.var(axis=0, ddof=1) - sdv_raw / mc.r_theta
    if mode == CORRELATED:
        out["cov"] = take("cov_raw").mean(axis=0)
    fbar = take("fbar").mean(axis=0)
    out["sdb"] = f_value - fbar
    out["mb"] = fbar - b.mean(axis=0)
    out["bias_sq"] = (out["sdb"] + out["mb"]) ** 2
    out["mse"] = take("mse").mean(axis=0)
    return out


def _collect_builtin(process, mode, m, rho, mc: MonteCarloConfig, seed: int) -> dict:
    """Per-replicate statistics using the process's built-in scalar predictor."""
    records = {key: np.empty(mc.r_real) for key in
               ("mv", "sdv_raw", "b", "fbar", "mse")}
    if mode == SHARED_SUMMARY:
        records["dpv_raw"] = np.empty(mc.r_real)
    if mode == CORRELATED:
        records["cov_raw"] = np.empty(mc.r_real)

    for r in range(mc.r_real):
        rng = child_rng(seed, "estimate", r)
        real = process.sample_real(rng)
        if mode == SHARED_SUMMARY:
            mv_u = np.empty(mc.summaries)
            sdv_u = np.empty(mc.summaries)
            c_u = np.empty(mc.summaries)
            fbar_u = np.empty(mc.summaries)
            for u in range(mc.summaries):
                summary = process.sample_summary(rng, real)
                thetas = process.sample_theta_from_summary(rng, summary, mc.r_theta)
                preds = process.predictor_outputs(
                    rng, np.repeat(thetas[:, None], mc.r_syn, axis=1))
                a = preds.mean(axis=1)
                mv_u[u] = preds.var(axis=1, ddof=1).mean()
                sdv_u[u] = a.var(ddof=1)
                c_u[u] = a.mean()
                fbar_u[u] = process.f_theta(thetas).mean()
            records["mv"][r] = mv_u.mean()
            records["sdv_raw"][r] = sdv_u.mean()
            records["dpv_raw"][r] = c_u.var(ddof=1)
            records["b"][r] = c_u.mean()
            records["fbar"][r] = fbar_u.mean()
        else:
            thetas = process.sample_theta(rng, real, mc.r_theta)
            preds = process.predictor_outputs(
                rng, np.repeat(thetas[:, None], mc.r_syn, axis=1))
            a = preds.mean(axis=1)
            records["mv"][r] = preds.var(axis=1, ddof=1).mean()
            records["sdv_raw"][r] = a.var(ddof=1)
            records["b"][r] = a.mean()
            records["fbar"][r] = process.f_theta(thetas).mean()
            if mode == CORRELATED:
                pairs = process.sample_theta_correlated(rng, real, mc.r_theta, 2, rho)
                g = process.predictor_outputs(rng, pairs)
                cov = np.cov(g[:, 0], g[:, 1], ddof=1)[0, 1]
                records["cov_raw"][r] = cov

        # Direct error estimate from fresh draws of everything.
        rng_d = child_rng(seed, "direct", r)
        real_d = process.sample_real(rng_d)
        if mode == SHARED_SUMMARY:
            summary_d = process.sample_summary(rng_d, real_d)
            thetas_d = process.sample_theta_from_summary(rng_d, summary_d, m)
        elif mode == CORRELATED:
            thetas_d = process.sample_theta_correlated(rng_d, real_d, 1, m, rho)[0]
        else:
            thetas_d = process.sample_theta(rng_d, real_d, m)
        g_hat = process.predictor_outputs(rng_d, thetas_d).mean()
        y = process.sample_y(rng_d, mc.r_y)
        records["mse"][r] = np.mean((y - g_hat) ** 2)
    return records


def _collect_generic(process, predictor: PredictorSpec, mode, m, rho,
                     test_points: np.ndarray, mc: MonteCarloConfig, seed: int) -> dict:
    """Per-replicate statistics training an actual predictor on sampled datasets.

    Slower than the built-in path; intended for small Monte Carlo counts.
    """
    if mode == SHARED_SUMMARY:
        raise ValueError("shared_summary oracle runs use the built-in predictor")
    n_x = test_points.shape[0]
    schema = process.schema
    feat_idx = schema.feature_indices
    test_rows = np.zeros((n_x, len(schema.columns)))
    test_rows[:, feat_idx] = test_points
    test_ds = Dataset(schema, test_rows)

    def train_predict(theta, rng_seed):
        ds = process.sample_synth_dataset(theta, process.n_synth, child_rng(rng_seed, "rows"))
        fm_train = encode(ds, ds, predictor.wants_standardize)
        fm_test = encode(ds, test_ds, predictor.wants_standardize)
        model = train(predictor, fm_train, child_seed(rng_seed, "train"))
        return _scalar_predictions(model, fm_test.x, predictor.task)

    records = {key: np.empty((mc.r_real, n_x)) for key in
               ("mv", "sdv_raw", "b", "fbar", "mse")}
    if mode == CORRELATED:
        records["cov_raw"] = np.empty((mc.r_real, n_x))

    for r in range(mc.r_real):
        rng = child_rng(seed, "estimate", r)
        real = process.sample_real(rng)
        thetas = process.sample_theta(rng, real, mc.r_theta)
        preds = np.empty((mc.r_theta, mc.r_syn, n_x))
        for t in range(mc.r_theta):
            for s in range(mc.r_syn):
                preds[t, s] = train_predict(thetas[t],
                                            child_seed(child_seed(seed, "grid", r),
                                                       "cell", t * mc.r_syn + s))
        a = preds.mean(axis=1)
        records["mv"][r] = preds.var(axis=1, ddof=1).mean(axis=0)
        records["sdv_raw"][r] = a.var(axis=0, ddof=1)
        records["b"][r] = a.mean(axis=0)
        records["fbar"][r] = np.mean(
            [np.broadcast_to(process.f_theta(th), (n_x,)) for th in thetas], axis=0)
        if mode == CORRELATED:
            pairs = process.sample_theta_correlated(rng, real, mc.r_theta, 2, rho)
            g = np.empty((mc.r_theta, 2, n_x))
            for t in range(mc.r_theta):
                for j in range(2):
                    g[t, j] = train_predict(pairs[t, j],
                                            child_seed(child_seed(seed, "covgrid", r),
                                                       "cell", t * 2 + j))
            gm = g.mean(axis=0)
            records["cov_raw"][r] = ((g[:, 0] - gm[0]) * (g[:, 1] - gm[1])).sum(axis=0) \
                / (mc.r_theta - 1)

        rng_d = child_rng(seed, "direct", r)
        real_d = process.sample_real(rng_d)
        if mode == CORRELATED:
            thetas_d = process.sample_theta_correlated(rng_d, real_d, 1, m, rho)[0]
        else:
            thetas_d = process.sample_theta(rng_d, real_d, m)
        member = np.array([train_predict(th, child_seed(child_seed(seed, "directgrid", r),
                                                        "cell", i))
                           for i, th in enumerate(thetas_d)])
        g_hat = member.mean(axis=0)
        y = process.sample_y(rng_d, (mc.r_y, n_x))
        records["mse"][r] = ((y - g_hat) ** 2).mean(axis=0)
    return records


def oracle_decompose(process, generator_mode: str = IID,
                     predictor: PredictorSpec | str = "builtin", m: int = 1,
                     test_points=None, mc: MonteCarloConfig = MonteCarloConfig(),
                     seed: int = 0, rho: float = 0.0) -> DecompositionReport:
    """Estimate every decomposition term on a truth process and check the identity.

    generator_mode selects the sampling structure: "iid" (parameters i.i.d.
    given the real data), "shared_summary" (parameters i.i.d. given one noisy
    summary, adding the DPVAR term), or "correlated" (parameter draws with
    pairwise correlation rho, adding the COV term weighted by 1 - 1/m).

    The direct error estimate comes from fresh draws of the full chain, so
    identity_gap = mse - (mv/m + sdv/m + (1-1/m) cov + rdv + dpvar + bias^2
    + noise) is an unbiased zero whose size is judged against its bootstrap
    standard error; a gap beyond the flag multiple marks the report as
    failed rather than raising.
    """
    if isinstance(process, str):
        process = get_process(process)
    if generator_mode not in (IID, SHARED_SUMMARY, CORRELATED):
        raise ValueError(f"unknown generator mode {generator_mode!r}")
    if generator_mode == SHARED_SUMMARY and not process.has_summary:
        raise ValueError(f"process {process.id!r} has no summary sampler")
    if generator_mode == CORRELATED and not process.supports_correlated:
        raise ValueError(f"process {process.id!r} has no correlated sampler")
    if m < 1:
        raise ValueError("m must be >= 1")

    builtin = isinstance(predictor, str) and predictor in ("builtin",
                                                           process.builtin_predictor)
    if builtin:
        records = _collect_builtin(process, generator_mode, m, rho, mc, seed)
        n_x = 1 if test_points is None else len(test_points)
        per_x = False
    else:
        if isinstance(predictor, str):
            predictor = PredictorSpec(predictor, process.schema.task)
        pts = np.atleast_2d(np.asarray(test_points if test_points is not None else [[0.0]],
                                       dtype=np.float64))
        records = _collect_generic(process, predictor, generator_mode, m, rho, pts, mc, seed)
        n_x = pts.shape[0]
        per_x = True

    noise = process.noise_var()
    f_value = process.f()
    stats = _assemble(records, generator_mode, mc, f_value)
    gap = _identity_gap(stats, m, noise, generator_mode)

    # Bootstrap over the outermost replication level.
    boot_rng = child_rng(seed, "bootstrap")
    names = list(stats) + ["gap"]
    boot = {name: np.empty(BOOTSTRAP_RESAMPLES) for name in names}
    for bi in range(BOOTSTRAP_RESAMPLES):
        idx = boot_rng.integers(0, mc.r_real, size=mc.r_real)
        bs = _assemble(records, generator_mode, mc, f_value, idx=idx)
        bg = _identity_gap(bs, m, noise, generator_mode)
        for name in stats:
            boot[name][bi] = np.mean(bs[name])
        boot["gap"][bi] = np.mean(bg)

    def estimate(name, value):
        return TermEstimate(value=float(np.mean(value)),
                            std_error=float(boot[name].std(ddof=1)))

    term_names = ["mse", "mv", "sdv", "rdv", "sdb", "mb"]
    if generator_mode == SHARED_SUMMARY:
        term_names.append("dpvar")
    if generator_mode == CORRELATED:
        term_names.append("cov")
    terms = {name: estimate(name, stats[name]) for name in term_names}
    terms["noise"] = TermEstimate(value=float(noise), std_error=0.0)

    gap_mean = float(np.mean(gap))
    gap_se = float(boot["gap"].std(ddof=1))
    status = "ok" if abs(gap_mean) <= IDENTITY_SE_MULTIPLE * gap_se else "identity_flagged"

    per_point = {}
    for name in term_names:
        vals = np.asarray(stats[name], dtype=np.float64)
        per_point[name] = vals if per_x else np.full(n_x, float(np.mean(vals)))

    config = {"process": process.id, "mode": generator_mode, "m": m, "rho": rho,
              "predictor": "builtin" if builtin else predictor.label,
              "mc": {"r_real": mc.r_real, "r_theta": mc.r_theta, "r_syn": mc.r_syn,
                     "r_y": mc.r_y, "r_summary": mc.summaries},
              "seed": seed, "n_test_points": n_x}
    coverage = {"term_se_multiple": TERM_SE_MULTIPLE,
                "term_coverage": _gauss_coverage(TERM_SE_MULTIPLE),
                "identity_se_multiple": IDENTITY_SE_MULTIPLE,
                "identity_coverage": _gauss_coverage(IDENTITY_SE_MULTIPLE),
                "bootstrap_resamples": BOOTSTRAP_RESAMPLES}
    return DecompositionReport(terms=terms, identity_gap=gap_mean, identity_gap_se=gap_se,
                               status=status, config=config, coverage=coverage,
                               per_point=per_point)


# --------------------------------------------------------------------------
# Bregman-divergence decomposition bound on a truth process
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BregmanBoundReport:
    error: TermEstimate
    mv: TermEstimate
    sdv: TermEstimate
    rdv: TermEstimate
    bias: TermEstimate
    noise: float
    bound_slack: float            # (mv + sdv + rdv + bias + noise) - error
    bound_slack_se: float
    config: dict

    @property
    def upper_bound(self) -> float:
        return self.mv.value + self.sdv.value + self.rdv.value + self.bias.value + self.noise

    def holds(self, multiple: float = TERM_SE_MULTIPLE) -> bool:
        return self.error.value <= self.upper_bound + multiple * self.bound_slack_se


def bregman_oracle_decompose(process, m: int = 1,
                             mc: MonteCarloConfig = MonteCarloConfig(),
                             seed: int = 0) -> BregmanBoundReport:
    """Check the generalized-variance upper bound for dual-averaged ensembles.

    Runs the i.i.d. chain of a binary truth process with probability-vector
    predictions under the negative-entropy potential. The expected divergence
    of the dual-averaged ensemble must not exceed MV + SDV + RDV + Bias +
    Noise (with equality at m = 1).
    """
    if isinstance(process, str):
        process = get_process(process)
    spec = brg.BregmanSpec(brg.NEGENTROPY, 2)
    p0 = process.f()
    y0 = np.array([1.0, 0.0])
    y1 = np.array([0.0, 1.0])
    y_weights = np.array([1.0 - p0, p0])
    y_mean = brg.dual_inverse(spec, brg.dual(spec, np.array([1.0 - p0, p0])))
    noise = float(y_weights @ np.array([brg.divergence(spec, y0, y_mean),
                                        brg.divergence(spec, y1, y_mean)]))

    mv_r = np.empty(mc.r_real)
    sdv_r = np.empty(mc.r_real)
    c_r_dual = np.empty((mc.r_real, 2))
    err_r = np.empty(mc.r_real)

    for r in range(mc.r_real):
        rng = child_rng(seed, "estimate", r)
        real = process.sample_real(rng)
        thetas = process.sample_theta(rng, real, mc.r_theta)
        probs = process.predictor_prob_outputs(
            rng, np.repeat(thetas[:, None], mc.r_syn, axis=1))   # (t, s, 2)
        duals = brg.dual(spec, probs)
        centers_t = brg.dual_inverse(spec, duals.mean(axis=1))   # E_{D_s|theta}[g]
        mv_r[r] = np.mean([brg.divergence(spec, centers_t[t], probs[t]).mean()
                           for t in range(mc.r_theta)])
        center_r = brg.dual_inverse(spec, brg.dual(spec, centers_t).mean(axis=0))
        sdv_r[r] = float(np.mean(brg.divergence(spec, center_r, centers_t)))
        c_r_dual[r] = duals.reshape(-1, 2).mean(axis=0)

        rng_d = child_rng(seed, "direct", r)
        real_d = process.sample_real(rng_d)
        thetas_d = process.sample_theta(rng_d, real_d, m)
        member = process.predictor_prob_outputs(rng_d, thetas_d)
        g_hat = brg.dual_average(spec, member)
        err_r[r] = float(y_weights @ np.array([brg.divergence(spec, y0, g_hat),
                                               brg.divergence(spec, y1, g_hat)]))

    def rdv_bias(idx):
        cd = c_r_dual if idx is None else c_r_dual[idx]
        centers = brg.dual_inverse(spec, cd)
        overall = brg.dual_inverse(spec, cd.mean(axis=0))
        rdv = float(np.mean(brg.divergence(spec, overall, centers)))
        bias = float(brg.divergence(spec, y_mean, overall))
        return rdv, bias

    rdv, bias = rdv_bias(None)
    boot_rng = child_rng(seed, "bootstrap")
    boot = {name: np.empty(BOOTSTRAP_RESAMPLES)
            for name in ("error", "mv", "sdv", "rdv", "bias", "slack")}
    for bi in range(BOOTSTRAP_RESAMPLES):
        idx = boot_rng.integers(0, mc.r_real, size=mc.r_real)
        rb, bb = rdv_bias(idx)
        boot["error"][bi] = err_r[idx].mean()
        boot["mv"][bi] = mv_r[idx].mean()
        boot["sdv"][bi] = sdv_r[idx].mean()
        boot["rdv"][bi] = rb
        boot["bias"][bi] = bb
        boot["slack"][bi] = (mv_r[idx].mean() + sdv_r[idx].mean() + rb + bb + noise
                             - err_r[idx].mean())

    def est(name, value):
        return TermEstimate(value=float(value), std_error=float(boot[name].std(ddof=1)))

    slack = float(mv_r.mean() + sdv_r.mean() + rdv + bias + noise - err_r.mean())
    config = {"process": process.id, "m": m, "seed": seed,
              "mc": {"r_real": mc.r_real, "r_theta": mc.r_theta, "r_syn": mc.r_syn}}
    return BregmanBoundReport(error=est("error", err_r.mean()),
                              mv=est("mv", mv_r.mean()), sdv=est("sdv", sdv_r.mean()),
                              rdv=est("rdv", rdv), bias=est("bias", bias), noise=noise,
                              bound_slack=slack,
                              bound_slack_se=float(boot["slack"].std(ddof=1)),
                              config=config)


# --------------------------------------------------------------------------
# Measured error curves over m
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveResult:
    rows: list[dict]
    per_repeat: dict[int, np.ndarray]
    aggregate: dict[int, tuple[float, float | None]]

    def means(self) -> dict[int, float]:
        return {m: mean for m, (mean, _) in self.aggregate.items()}


def curve_repeat(generator: GeneratorSpec, data: Dataset, predictor: PredictorSpec,
                 test: Dataset, m_values, averaging: str, metric: MetricSpec,
                 rep_seed: int, mode: str = "independent") -> dict[int, tuple]:
    """One experiment repeat: generate max(m) datasets, train one model per
    dataset, score the nested ensemble prefixes. Pure in rep_seed, so repeats
    may run in any order or in parallel."""
    if averaging != MEAN and predictor.task != "classification":
        raise ValueError("dual_log_prob averaging requires a classification task")
    max_m = max(m_values)
    datasets, _ = generate_ensemble(generator, data, max_m, mode, seed=rep_seed)
    member_preds = []
    y_ref = None
    for i, ds in enumerate(datasets):
        fm_train = encode(ds, ds, predictor.wants_standardize)
        fm_test = encode(ds, test, predictor.wants_standardize)
        model = train(predictor, fm_train, child_seed(rep_seed, "train", i))
        member_preds.append(predict_batch(model, fm_test.x))
        y_ref = fm_test.y
    member_preds = np.asarray(member_preds)
    out = {}
    for m in m_values:
        combined = combine_predictions(member_preds[:m], averaging)
        result = score_predictions(combined, y_ref, metric, task=predictor.task)
        out[m] = (result.score, result.std_error)
    return out


def mse_curve(generator: GeneratorSpec, data: Dataset,
              predictor: PredictorSpec | str, test: Dataset,
              m_values, repeats: int, averaging: str = MEAN,
              metric: MetricSpec = MetricSpec("mse"), seed: int = 0,
              mode: str = "independent", dataset_label: str = "data") -> CurveResult:
    """Measure the ensemble error for each m, reusing nested member prefixes.

    Each repeat generates max(m_values) synthetic datasets once and trains
    one model per dataset; the ensemble for a smaller m uses the first m
    members, so the curve within a repeat is driven by the same draws.
    """
    if isinstance(predictor, str):
        predictor = PredictorSpec(predictor, data.schema.task)
    m_values = sorted(set(int(m) for m in m_values))
    if m_values[0] < 1:
        raise ValueError("m values must be >= 1")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")

    per_repeat = {m: np.empty(repeats) for m in m_values}
    rows = []
    for j in range(repeats):
        scores = curve_repeat(generator, data, predictor, test, m_values, averaging,
                              metric, child_seed(seed, "repeat", j), mode)
        for m in m_values:
            score, se = scores[m]
            per_repeat[m][j] = score
            rows.append({"dataset": dataset_label, "generator": generator.kind,
                         "mode": mode, "predictor": predictor.label,
                         "averaging": averaging, "metric": metric.kind, "m": m,
                         "repeat": j, "score": score, "std_error": se})

    aggregate = {}
    for m in m_values:
        scores = per_repeat[m]
        se = float(scores.std(ddof=1) / math.sqrt(repeats)) if repeats > 1 else None
        aggregate[m] = (float(scores.mean()), se)
    return CurveResult(rows=rows, per_repeat=per_repeat, aggregate=aggregate)
