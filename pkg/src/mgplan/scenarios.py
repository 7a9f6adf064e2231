"""Representative-day construction by k-means clustering of daily profiles."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .domain import DAYS_PER_YEAR, HOURS_PER_DAY, RepresentativeDay
from .errors import EmptyInputError, KTooLargeError, ParseError


@dataclass
class DayVectors:
    """One row per calendar day: the 24-hour slices of every profile, side by side."""

    features: np.ndarray  # (days, 24 * n_profiles)
    demand_keys: tuple[str, ...]
    availability_keys: tuple[str, ...]

    @property
    def keys(self) -> tuple[str, ...]:
        return self.demand_keys + self.availability_keys

    @property
    def n_days(self) -> int:
        return self.features.shape[0]

    def segment(self, key: str) -> slice:
        j = self.keys.index(key)
        return slice(j * HOURS_PER_DAY, (j + 1) * HOURS_PER_DAY)


def day_vectors(demand: Mapping[str, Sequence[float]],
                availability: Mapping[str, Sequence[float]]) -> DayVectors:
    """Slice year-long normalized profiles into daily feature vectors."""
    keys = list(demand) + list(availability)
    if not keys:
        raise EmptyInputError("no profiles supplied")
    arrays = [np.asarray(demand[k], dtype=float) for k in demand]
    arrays += [np.asarray(availability[k], dtype=float) for k in availability]
    n = arrays[0].size
    if n == 0 or n % HOURS_PER_DAY:
        raise EmptyInputError(f"profile length {n} is not a positive multiple of 24")
    for k, a in zip(keys, arrays):
        if a.size != n:
            raise EmptyInputError(f"profile {k!r} has {a.size} values, expected {n}")
        if np.any(a < 0) or np.any(a > 1):
            raise ValueError(f"profile {k!r} is not normalized to [0, 1]")
    days = n // HOURS_PER_DAY
    feats = np.hstack([a.reshape(days, HOURS_PER_DAY) for a in arrays])
    return DayVectors(feats, tuple(demand), tuple(availability))


@dataclass
class ClusterResult:
    centroids: np.ndarray  # (k, features)
    assignment: np.ndarray  # (days,) cluster index
    weights: np.ndarray  # (k,) member counts
    objective: float
    history: list = field(default_factory=list)  # objective after each assignment step
    iterations: int = 0


def _sq_dist(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # explicit differences: exact zeros for identical rows, unlike the expanded form
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _member_means(x: np.ndarray, assignment: np.ndarray, k: int) -> np.ndarray:
    # shifted by the first member: identical members give their exact value back
    out = np.empty((k, x.shape[1]))
    for c in range(k):
        members = x[assignment == c]
        out[c] = members[0] + (members - members[0]).mean(axis=0)
    return out


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    d2 = _sq_dist(x, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            break
        idx = int(rng.choice(n, p=d2 / total))
        centers.append(x[idx])
        d2 = np.minimum(d2, _sq_dist(x, x[idx][None, :])[:, 0])
    return np.array(centers)


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300, tol: float = 0.0,
           feature_weights: Optional[np.ndarray] = None) -> ClusterResult:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when the assignment no longer changes, when every centroid moves less
    than ``tol`` (Euclidean), or after ``max_iter`` assignment steps. Ties go to
    the lowest cluster index. A cluster left empty is reseeded at the point
    farthest from its assigned centroid.
    """
    x = np.asarray(points.features if isinstance(points, DayVectors) else points,
                   dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyInputError("no day vectors to cluster")
    if k < 1:
        raise KTooLargeError(f"k must be >= 1, got {k}")
    distinct = np.unique(x, axis=0).shape[0]
    if k > distinct:
        raise KTooLargeError(f"k={k} exceeds the {distinct} distinct day vectors")
    xs = x
    if feature_weights is not None:
        w = np.asarray(feature_weights, dtype=float)
        if isinstance(points, DayVectors) and w.size == len(points.keys):
            w = np.repeat(w, HOURS_PER_DAY)
        xs = x * np.sqrt(w)

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(xs, k, rng)
    assignment = None
    history = []
    it = 0
    while True:
        d2 = _sq_dist(xs, centroids)
        new_assign = np.argmin(d2, axis=1)
        counts = np.bincount(new_assign, minlength=k)
        # empty-cluster repair
        for c in np.flatnonzero(counts == 0):
            own = d2[np.arange(len(xs)), new_assign]
            far = int(np.argmax(own))
            centroids[c] = xs[far]
            d2 = _sq_dist(xs, centroids)
            new_assign = np.argmin(d2, axis=1)
            counts = np.bincount(new_assign, minlength=k)
        history.append(float(d2[np.arange(len(xs)), new_assign].sum()))
        it += 1
        if assignment is not None and np.array_equal(new_assign, assignment):
            break
        assignment = new_assign
        new_centroids = _member_means(xs, assignment, k)
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if it >= max_iter or (tol > 0 and shift < tol):
            d2 = _sq_dist(xs, centroids)
            history.append(float(d2[np.arange(len(xs)), assignment].sum()))
            break

    weights = np.bincount(assignment, minlength=k)
    raw_centroids = _member_means(x, assignment, k)
    return ClusterResult(raw_centroids, assignment, weights, history[-1], history, it)


def net_load_stress(dv: DayVectors) -> np.ndarray:
    """Default ranking key per day: total demand minus total availability."""
    f = dv.features
    score = np.zeros(dv.n_days)
    for key in dv.demand_keys:
        score += f[:, dv.segment(key)].sum(axis=1)
    for key in dv.availability_keys:
        score -= f[:, dv.segment(key)].sum(axis=1)
    return score


def _to_day(dv: DayVectors, vec: np.ndarray, sid: str, weight: float) -> RepresentativeDay:
    def seg(key):
        return tuple(float(min(1.0, max(0.0, v))) for v in vec[dv.segment(key)])
    return RepresentativeDay(
        id=sid, weight=float(weight),
        demand_profile={k: seg(k) for k in dv.demand_keys},
        availability_profile={k: seg(k) for k in dv.availability_keys})


def extract_triplet(dv: DayVectors, k: int, seed: int = 0, max_iter: int = 300,
                    tol: float = 0.0,
                    ranking_key: Optional[Callable[[DayVectors], np.ndarray]] = None,
                    feature_weights=None, year_days: float = DAYS_PER_YEAR):
    """Best, nominal and worst representative-day lists of length ``k``.

    Nominal days are the centroids. Worst and best are, per cluster, the member
    days maximizing and minimizing the ranking key. Each day carries its
    cluster's member count as weight, rescaled so the weights sum to
    ``year_days`` when the input is not exactly one 365-day year.
    """
    res = kmeans(dv, k, seed=seed, max_iter=max_iter, tol=tol,
                 feature_weights=feature_weights)
    score = (ranking_key or net_load_stress)(dv)
    scale = year_days / dv.n_days
    best, nominal, worst = [], [], []
    for c in range(k):
        members = np.flatnonzero(res.assignment == c)
        w = res.weights[c] * scale
        s = score[members]
        hi = members[int(np.argmax(s))]
        lo = members[int(np.argmin(s))]
        nominal.append(_to_day(dv, res.centroids[c], f"nominal{c}", w))
        worst.append(_to_day(dv, dv.features[hi], f"worst{c}", w))
        best.append(_to_day(dv, dv.features[lo], f"best{c}", w))
    return best, nominal, worst


def write_days_csv(days: Sequence[RepresentativeDay], path) -> None:
    """Write ``scenario_id,weight,profile_key,h0..h23`` rows, demand profiles first."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario_id", "weight", "profile_key"]
                   + [f"h{t}" for t in range(HOURS_PER_DAY)])
        for d in days:
            for prof in (d.demand_profile, d.availability_profile):
                for key, vals in prof.items():
                    w.writerow([d.id, repr(float(d.weight)), key]
                               + [repr(float(v)) for v in vals])


def read_days_csv(path, demand_keys: Sequence[str] = ()) -> list[RepresentativeDay]:
    """Read days written by :func:`write_days_csv`.

    Profile keys listed in ``demand_keys`` become demand profiles; all others
    are treated as availability profiles.
    """
    path = Path(path)
    demand_keys = set(demand_keys)
    days: dict[str, dict] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["scenario_id", "weight", "profile_key"]:
            raise ParseError("missing scenario header", row=1, source=path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                sid, weight, key = row[0], float(row[1]), row[2]
                vals = tuple(float(v) for v in row[3:])
            except (ValueError, IndexError) as exc:
                raise ParseError(str(exc), row=lineno, source=path) from exc
            if len(vals) != HOURS_PER_DAY:
                raise ParseError(f"expected 24 hourly values, got {len(vals)}",
                                 row=lineno, source=path)
            entry = days.setdefault(sid, {"weight": weight, "demand": {},
                                          "availability": {}})
            entry["demand" if key in demand_keys else "availability"][key] = vals
    return [RepresentativeDay(sid, e["weight"], e["demand"], e["availability"])
            for sid, e in days.items()]
