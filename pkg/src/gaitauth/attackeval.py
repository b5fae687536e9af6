"""Zero-effort and random-vector attacks plus the FAR/FRR/HTER/ROC metrics.

The zero-effort attack replays other users' genuine test rows against a
model; the random-vector attack probes it with uniform draws from the
normalized feature cube [0,1]^n, whose acceptance fraction estimates the
measure of the region the model labels genuine.  That acceptance region can
far exceed FAR, which is why both are always reported together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import TrainedAuthModel, score_rows

PROBE_CHUNK = 65536


@dataclass(frozen=True)
class ConfusionCounts:
    """Impostor trials split into FA/TR; genuine trials into FR/TA."""

    fa: int
    tr: int
    fr: int
    ta: int

    def __post_init__(self):
        for name in ("fa", "tr", "fr", "ta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def impostor_trials(self) -> int:
        return self.fa + self.tr

    @property
    def genuine_trials(self) -> int:
        return self.fr + self.ta


@dataclass(frozen=True)
class EvalReport:
    """One model's evaluation: operating-point metrics, attack estimate, ROC."""

    far: float
    frr: float
    hter: float
    ar_estimate: float
    ar_ci95: tuple
    n_probes: int
    roc: tuple  # of (far, frr, threshold)

    def __post_init__(self):
        if abs(self.hter - (self.far + self.frr) / 2.0) > 1e-12:
            raise ValueError("hter must equal (far + frr) / 2")
        lo, hi = self.ar_ci95
        if not lo <= self.ar_estimate <= hi:
            raise ValueError("confidence interval must contain the estimate")


def zero_effort_eval(model: TrainedAuthModel, genuine_test: np.ndarray,
                     impostor_test: np.ndarray,
                     threshold: float = None) -> ConfusionCounts:
    """Confusion counts from scoring both test sets at one threshold."""
    genuine_test = np.asarray(genuine_test, dtype=np.float64)
    impostor_test = np.asarray(impostor_test, dtype=np.float64)
    if genuine_test.size == 0:
        raise ValueError("genuine test set is empty")
    if impostor_test.size == 0:
        raise ValueError("impostor test set is empty")
    if threshold is None:
        threshold = model.threshold
    genuine_scores = score_rows(model, genuine_test)
    impostor_scores = score_rows(model, impostor_test)
    ta = int(np.sum(genuine_scores >= threshold))
    fa = int(np.sum(impostor_scores >= threshold))
    return ConfusionCounts(fa=fa, tr=len(impostor_scores) - fa,
                           fr=len(genuine_scores) - ta, ta=ta)


def compute_metrics(counts: ConfusionCounts):
    """(FAR, FRR, HTER) = (FA/(FA+TR), FR/(FR+TA), average).

    Zero denominators are an error: a rate over no trials is undefined and
    must never silently read as zero.
    """
    if counts.impostor_trials == 0:
        raise ValueError("FAR undefined: no impostor trials")
    if counts.genuine_trials == 0:
        raise ValueError("FRR undefined: no genuine trials")
    far = counts.fa / counts.impostor_trials
    frr = counts.fr / counts.genuine_trials
    return far, frr, (far + frr) / 2.0


def random_vector_attack(model: TrainedAuthModel, n_probes: int, dims: int,
                         threshold: float = None, seed: int = 0):
    """Uniform probes in [0,1]^dims; returns (acceptance estimate, 95% CI).

    The interval is the normal-approximation binomial CI clamped to [0,1];
    at the degenerate extremes (no accepts / all accepts) it falls back to
    the rule-of-three bound, which the normal formula would collapse to a
    zero-width interval.
    """
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    if dims != model.feature_dim:
        raise ValueError(f"dims {dims} != model feature_dim {model.feature_dim}")
    if threshold is None:
        threshold = model.threshold
    rng = np.random.default_rng(seed)
    accepted = 0
    remaining = n_probes
    while remaining > 0:
        block = min(PROBE_CHUNK, remaining)
        probes = rng.random((block, dims))
        accepted += int(np.sum(score_rows(model, probes) >= threshold))
        remaining -= block
    estimate = accepted / n_probes
    if accepted == 0:
        ci = (0.0, min(1.0, 3.0 / n_probes))
    elif accepted == n_probes:
        ci = (max(0.0, 1.0 - 3.0 / n_probes), 1.0)
    else:
        half = 1.96 * float(np.sqrt(estimate * (1.0 - estimate) / n_probes))
        ci = (max(0.0, estimate - half), min(1.0, estimate + half))
    return estimate, ci


def roc_curve(genuine_scores, impostor_scores, n_thresholds: int = 512):
    """(far, frr, threshold) points over an ascending threshold sweep.

    Thresholds are n_thresholds even steps over [0,1], joined by the distinct
    observed scores when there are fewer of them than n_thresholds, plus a
    just-above-1 sentinel so the far=0 endpoint is always present (scores
    live in [0,1], so nothing clears that threshold).  FAR is non-increasing
    and FRR non-decreasing along the sweep.
    """
    genuine_scores = np.asarray(genuine_scores, dtype=np.float64).ravel()
    impostor_scores = np.asarray(impostor_scores, dtype=np.float64).ravel()
    if len(genuine_scores) == 0 or len(impostor_scores) == 0:
        raise ValueError("score lists must be non-empty")
    thresholds = set(np.linspace(0.0, 1.0, n_thresholds).tolist())
    observed = set(genuine_scores.tolist()) | set(impostor_scores.tolist())
    if len(observed) < n_thresholds:
        thresholds |= observed
    thresholds.add(float(np.nextafter(1.0, 2.0)))
    thresholds = np.asarray(sorted(thresholds))

    gen_sorted = np.sort(genuine_scores)
    imp_sorted = np.sort(impostor_scores)
    n_gen, n_imp = len(gen_sorted), len(imp_sorted)
    # score >= t accepts: FAR(t) = #(impostor >= t)/n, FRR(t) = #(genuine < t)/n.
    far = (n_imp - np.searchsorted(imp_sorted, thresholds, side="left")) / n_imp
    frr = np.searchsorted(gen_sorted, thresholds, side="left") / n_gen
    return [(float(f), float(r), float(t))
            for f, r, t in zip(far, frr, thresholds)]


def evaluate_model(model: TrainedAuthModel, genuine_test: np.ndarray,
                   impostor_test: np.ndarray, threshold: float = None,
                   n_probes: int = 10000, seed: int = 0,
                   n_thresholds: int = 512) -> EvalReport:
    """Full per-model evaluation: confusion metrics + attack estimate + ROC."""
    if threshold is None:
        threshold = model.threshold
    counts = zero_effort_eval(model, genuine_test, impostor_test, threshold)
    far, frr, hter = compute_metrics(counts)
    ar, ci = random_vector_attack(model, n_probes, model.feature_dim,
                                  threshold, seed)
    roc = roc_curve(score_rows(model, genuine_test),
                    score_rows(model, impostor_test), n_thresholds)
    return EvalReport(far=far, frr=frr, hter=hter, ar_estimate=ar, ar_ci95=ci,
                      n_probes=n_probes, roc=tuple(roc))


def equal_error_point(roc):
    """(threshold, far, frr) on the sweep where |far - frr| is smallest."""
    best = min(roc, key=lambda point: abs(point[0] - point[1]))
    return best[2], best[0], best[1]
