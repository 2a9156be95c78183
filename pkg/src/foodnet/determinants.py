"""Statistics linking the yearly robustness series to external drivers.

The input is a small annual panel: one target column (the robustness
index) plus driver columns such as freight rates, geopolitical risk,
disaster counts, food prices, oil-price uncertainty, and production.
On top of it sit Spearman/Pearson correlations, OLS with classical
inference, bidirectional stepwise selection, ridge regression, and
random-forest feature importances, all reproducible under a fixed seed.

OLS, ridge, stepwise, and the correlation machinery are written out
longhand on numpy primitives so every number has a visible formula;
the random forest wraps scikit-learn's regressor, which already is the
reference implementation of mean-decrease-in-impurity importances.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats as spstats

from .errors import (
    DegenerateFeatureError,
    InsufficientDataError,
    ParseError,
    SingularDesignError,
)

#: Switch from the exact permutation null to the t approximation above this n.
EXACT_PERMUTATION_LIMIT = 10


@dataclass(frozen=True)
class Coefficient:
    estimate: float
    std_error: float | None = None
    p_value: float | None = None


@dataclass(frozen=True)
class RegressionReport:
    """One fitted model; only the fields that apply are populated."""

    model: str  # ols | stepwise | ridge | rf
    coefficients: dict[str, Coefficient]
    r_squared: float
    n_rows: int
    selected: tuple[str, ...] | None = None
    lambda_: float | None = None
    importances: dict[str, float] | None = None
    trace: tuple[tuple[str, str, float], ...] | None = None

    def to_json(self) -> str:
        payload = {
            "model": self.model,
            "n_rows": self.n_rows,
            "r_squared": self.r_squared,
            "coefficients": {
                name: {
                    "estimate": c.estimate,
                    "std_error": c.std_error,
                    "p_value": c.p_value,
                }
                for name, c in self.coefficients.items()
            },
        }
        if self.selected is not None:
            payload["selected"] = list(self.selected)
        if self.lambda_ is not None:
            payload["lambda"] = self.lambda_
        if self.importances is not None:
            payload["importances"] = self.importances
        if self.trace is not None:
            payload["trace"] = [
                {"action": a, "feature": f, "p": p} for a, f, p in self.trace
            ]
        return json.dumps(payload, indent=2, sort_keys=True)


@dataclass(frozen=True)
class DeterminantsTable:
    """Complete-case annual panel: target column plus driver features."""

    frame: pd.DataFrame  # indexed by year, ascending; no missing values
    target: str
    features: tuple[str, ...]
    dropped_rows: int

    @property
    def n_rows(self) -> int:
        return len(self.frame)


def table_from_frame(df: pd.DataFrame, target: str = "R") -> DeterminantsTable:
    """Build a table from a raw frame with ``year`` + target + features.

    Non-numeric cells become missing; rows with any missing value are
    dropped (and counted) so every fit sees complete cases only.
    """
    if "year" not in df.columns:
        raise ParseError("determinants table needs a 'year' column")
    if target not in df.columns:
        raise ParseError(f"determinants table is missing target column {target!r}")
    features = tuple(c for c in df.columns if c not in ("year", target))
    data = df[["year", target, *features]].copy()
    for col in (target, *features):
        data[col] = pd.to_numeric(data[col], errors="coerce")
    complete = data.dropna()
    dropped = len(data) - len(complete)
    complete = complete.astype({"year": int}).set_index("year").sort_index()
    return DeterminantsTable(
        frame=complete, target=target, features=features, dropped_rows=dropped
    )


def load_determinants_csv(path, target: str = "R") -> DeterminantsTable:
    return table_from_frame(pd.read_csv(path), target=target)


def standardize(table: DeterminantsTable) -> DeterminantsTable:
    """Center and scale every column to mean 0, sample std 1.

    A column with fewer than two distinct values cannot be scaled and is
    reported by name.
    """
    frame = table.frame.copy()
    for col in frame.columns:
        values = frame[col].to_numpy(dtype=float)
        if len(np.unique(values)) < 2:
            raise DegenerateFeatureError(
                f"column {col!r} is constant and cannot be standardized", column=col
            )
        frame[col] = (values - values.mean()) / values.std(ddof=1)
    return DeterminantsTable(
        frame=frame,
        target=table.target,
        features=table.features,
        dropped_rows=table.dropped_rows,
    )


# ---------------------------------------------------------------------------
# correlations


def _as_float_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional series")
    return arr


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y = _as_float_array(x), _as_float_array(y)
    if len(x) != len(y):
        raise ValueError(f"series lengths differ: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise ValueError(f"need at least 3 observations, got {len(x)}")
    return x, y


def _pearson_rho(x: np.ndarray, y: np.ndarray) -> float:
    a = x - x.mean()
    b = y - y.mean()
    denom = math.sqrt(math.fsum(a * a) * math.fsum(b * b))
    if denom == 0.0:
        return math.nan
    return math.fsum(a * b) / denom


def _t_approx_p(rho: float, n: int) -> float:
    if math.isnan(rho):
        return math.nan
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return min(1.0, 2.0 * float(spstats.t.sf(abs(t), n - 2)))


def _exact_permutation_p(a: np.ndarray, b: np.ndarray, rho: float) -> float:
    """Two-sided exact p: share of orderings of b at least as extreme."""
    a_c = a - a.mean()
    b_c = b - b.mean()
    denom = math.sqrt(float(a_c @ a_c) * float(b_c @ b_c))
    threshold = abs(rho) - 1e-12
    n = len(b_c)
    total = math.factorial(n)
    hits = 0
    perms = itertools.permutations(b_c.tolist())
    while True:
        block = list(itertools.islice(perms, 40320))
        if not block:
            break
        rhos = np.asarray(block) @ a_c / denom
        hits += int(np.count_nonzero(np.abs(rhos) >= threshold))
    return hits / total


def spearman(x, y) -> tuple[float, float]:
    """Rank correlation with average ranks for ties.

    The p-value is exact (full permutation null) for n <= 10 and the
    usual t approximation beyond that.  A constant series has no
    defined rank correlation and yields (nan, nan).
    """
    x, y = _check_pair(x, y)
    rx = spstats.rankdata(x, method="average")
    ry = spstats.rankdata(y, method="average")
    rho = _pearson_rho(rx, ry)
    if math.isnan(rho):
        return rho, math.nan
    n = len(x)
    if n <= EXACT_PERMUTATION_LIMIT:
        return rho, _exact_permutation_p(rx, ry, rho)
    return rho, _t_approx_p(rho, n)


def pearson(x, y) -> tuple[float, float]:
    """Linear correlation with the t-approximation p-value."""
    x, y = _check_pair(x, y)
    rho = _pearson_rho(x, y)
    return rho, _t_approx_p(rho, len(x))


def spearman_matrix(frame: pd.DataFrame) -> pd.DataFrame:
    """Pairwise Spearman rho over the frame's columns.

    Symmetric with a unit diagonal by convention; pairs involving a
    constant column come out as NaN.
    """
    cols = list(frame.columns)
    ranked = {
        c: spstats.rankdata(frame[c].to_numpy(dtype=float), method="average")
        for c in cols
    }
    out = pd.DataFrame(np.eye(len(cols)), index=cols, columns=cols)
    for i, a in enumerate(cols):
        for j in range(i + 1, len(cols)):
            b = cols[j]
            # rho only; skipping the p-value avoids the exact permutation
            # null, which is factorial in the column length
            rho = _pearson_rho(ranked[a], ranked[b])
            out.loc[a, b] = rho
            out.loc[b, a] = rho
    return out


# ---------------------------------------------------------------------------
# linear models


def _resolve(table: DeterminantsTable, target, features):
    target = target or table.target
    features = tuple(features) if features is not None else table.features
    missing = [c for c in (target, *features) if c not in table.frame.columns]
    if missing:
        raise ValueError(f"columns not in table: {missing}")
    return target, features


def _design(table, target, features) -> tuple[np.ndarray, np.ndarray]:
    y = table.frame[target].to_numpy(dtype=float)
    X = np.column_stack(
        [np.ones(len(y))] + [table.frame[f].to_numpy(dtype=float) for f in features]
    )
    return X, y


def _dependent_columns(X: np.ndarray, names: list[str]) -> tuple[str, ...]:
    """Columns that participate in a linear dependency (rank unchanged
    when the column is removed)."""
    r = np.linalg.matrix_rank(X)
    dep = []
    for j in range(X.shape[1]):
        if np.linalg.matrix_rank(np.delete(X, j, axis=1)) == r:
            dep.append(names[j])
    return tuple(dep)


def _r_squared(y: np.ndarray, resid: np.ndarray) -> float:
    tss = float(np.sum((y - y.mean()) ** 2))
    rss = float(resid @ resid)
    if tss == 0.0:
        return 1.0 if rss < 1e-12 else 0.0
    return 1.0 - rss / tss


def ols(
    table: DeterminantsTable,
    target: str | None = None,
    features=None,
) -> RegressionReport:
    """Least squares with intercept, classical standard errors, and
    two-sided t-test p-values."""
    target, features = _resolve(table, target, features)
    X, y = _design(table, target, features)
    n, p = X.shape
    if n <= p:
        raise InsufficientDataError(
            f"OLS needs more than {p} rows for {p - 1} features, got {n}"
        )
    names = ["intercept", *features]
    if np.linalg.matrix_rank(X) < p:
        dep = _dependent_columns(X, names)
        raise SingularDesignError(
            f"design matrix is rank deficient; dependent columns: {dep}", columns=dep
        )
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = n - p
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = np.sqrt(np.diag(cov))
    coeffs = {}
    for i, name in enumerate(names):
        if se[i] > 0.0:
            t = beta[i] / se[i]
            pv = min(1.0, 2.0 * float(spstats.t.sf(abs(t), dof)))
        else:
            pv = 0.0 if beta[i] != 0.0 else 1.0
        coeffs[name] = Coefficient(float(beta[i]), float(se[i]), pv)
    return RegressionReport(
        model="ols",
        coefficients=coeffs,
        r_squared=_r_squared(y, resid),
        n_rows=n,
    )


def _intercept_only(table, target) -> RegressionReport:
    y = table.frame[target].to_numpy(dtype=float)
    n = len(y)
    mean = float(y.mean())
    resid = y - mean
    se = math.sqrt(float(resid @ resid) / (n - 1) / n) if n > 1 else math.nan
    if se > 0.0:
        pv = min(1.0, 2.0 * float(spstats.t.sf(abs(mean / se), n - 1)))
    else:
        pv = 0.0 if mean != 0.0 else 1.0
    return RegressionReport(
        model="stepwise",
        coefficients={"intercept": Coefficient(mean, se, pv)},
        r_squared=0.0,
        n_rows=n,
        selected=(),
    )


def stepwise(
    table: DeterminantsTable,
    target: str | None = None,
    features=None,
    p_enter: float = 0.05,
    p_remove: float = 0.10,
) -> RegressionReport:
    """Bidirectional stepwise selection to a fixpoint.

    Forward: add the candidate with the smallest p-value if it clears
    ``p_enter``.  Backward: drop the retained variable with the largest
    p-value if it exceeds ``p_remove``.  Requires p_enter <= p_remove,
    otherwise add/drop cycles are possible.  An empty selection is a
    valid outcome; the report then describes the intercept-only model.
    """
    if p_enter > p_remove:
        raise ValueError(
            f"p_enter ({p_enter}) must not exceed p_remove ({p_remove}); "
            "the reverse invites add/drop oscillation"
        )
    target, features = _resolve(table, target, features)
    selected: list[str] = []
    trace: list[tuple[str, str, float]] = []
    for _ in range(4 * len(features) * len(features) + 10):
        moved = False
        # forward pass
        best_feature, best_p = None, math.inf
        for cand in features:
            if cand in selected:
                continue
            if table.n_rows <= len(selected) + 2:
                break  # no degrees of freedom left for another term
            try:
                fit = ols(table, target, [*selected, cand])
            except SingularDesignError:
                continue
            pv = fit.coefficients[cand].p_value
            if pv < best_p:
                best_feature, best_p = cand, pv
        if best_feature is not None and best_p < p_enter:
            selected.append(best_feature)
            trace.append(("add", best_feature, best_p))
            moved = True
        # backward pass
        if selected:
            fit = ols(table, target, selected)
            worst = max(selected, key=lambda f: fit.coefficients[f].p_value)
            worst_p = fit.coefficients[worst].p_value
            if worst_p > p_remove:
                selected.remove(worst)
                trace.append(("drop", worst, worst_p))
                moved = True
        if not moved:
            break
    if not selected:
        report = _intercept_only(table, target)
        return RegressionReport(
            model="stepwise",
            coefficients=report.coefficients,
            r_squared=report.r_squared,
            n_rows=report.n_rows,
            selected=(),
            trace=tuple(trace),
        )
    final = ols(table, target, selected)
    return RegressionReport(
        model="stepwise",
        coefficients=final.coefficients,
        r_squared=final.r_squared,
        n_rows=final.n_rows,
        selected=tuple(selected),
        trace=tuple(trace),
    )


def _penalty_rows(n_features: int, lam: float) -> np.ndarray:
    # sqrt(lambda) * I on the slope columns, zero on the intercept column
    return np.hstack(
        [np.zeros((n_features, 1)), math.sqrt(lam) * np.eye(n_features)]
    )


def ridge(
    table: DeterminantsTable,
    target: str | None = None,
    features=None,
    lam: float = 1.0,
) -> RegressionReport:
    """L2-penalized least squares; the intercept is never penalized.

    Solved as an augmented least-squares system [X; sqrt(lam) I], which
    equals the closed form (X'X + lam I*)^-1 X'y without forming the
    normal equations.  lam=0 degenerates to OLS.
    """
    if lam < 0.0:
        raise ValueError(f"ridge penalty must be >= 0, got {lam}")
    target, features = _resolve(table, target, features)
    X, y = _design(table, target, features)
    n, p = X.shape
    if n < 2:
        raise InsufficientDataError(f"ridge needs at least 2 rows, got {n}")
    X_aug = np.vstack([X, _penalty_rows(p - 1, lam)])
    y_aug = np.concatenate([y, np.zeros(p - 1)])
    beta, _, _, _ = np.linalg.lstsq(X_aug, y_aug, rcond=None)
    resid = y - X @ beta
    names = ["intercept", *features]
    coeffs = {name: Coefficient(float(b)) for name, b in zip(names, beta)}
    return RegressionReport(
        model="ridge",
        coefficients=coeffs,
        r_squared=_r_squared(y, resid),
        n_rows=n,
        lambda_=lam,
    )


DEFAULT_RIDGE_GRID = (0.0, 0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)


def ridge_loocv(
    table: DeterminantsTable,
    target: str | None = None,
    features=None,
    lambdas=DEFAULT_RIDGE_GRID,
) -> tuple[float, dict[float, float]]:
    """Leave-one-out sweep over a penalty grid.

    Uses the hat-matrix shortcut (loo residual = residual / (1 - h_ii)),
    so the whole sweep costs one solve per lambda.  Returns the best
    penalty (smallest PRESS, ties to the smaller lambda) and the scores.
    """
    target, features = _resolve(table, target, features)
    X, y = _design(table, target, features)
    n, p = X.shape
    press: dict[float, float] = {}
    penalty = np.zeros((p, p))
    penalty[1:, 1:] = np.eye(p - 1)
    for lam in sorted(lambdas):
        if lam < 0.0:
            raise ValueError(f"ridge penalty must be >= 0, got {lam}")
        try:
            core = np.linalg.solve(X.T @ X + lam * penalty, X.T)
        except np.linalg.LinAlgError:
            continue
        hat = X @ core
        resid = y - hat @ y
        leverage = np.diag(hat)
        if np.any(leverage >= 1.0 - 1e-12):
            press[lam] = math.inf
            continue
        press[lam] = float(np.sum((resid / (1.0 - leverage)) ** 2))
    if not press:
        raise SingularDesignError(
            "no penalty in the grid produced a solvable system", columns=features
        )
    best = min(press, key=lambda lam: (press[lam], lam))
    return best, press


# ---------------------------------------------------------------------------
# random forest


def random_forest_importance(
    table: DeterminantsTable,
    target: str | None = None,
    features=None,
    trees: int = 500,
    max_depth: int | None = None,
    min_leaf: int = 2,
    seed: int = 0,
    jobs: int = 1,
) -> RegressionReport:
    """Mean-decrease-in-impurity importances from a regression forest.

    Defaults follow the usual regression-forest recipe: 500 trees,
    unbounded depth, leaves of at least 2, ceil(d/3) features tried per
    split.  Importances are non-negative and sum to 1; a forest that
    never splits (constant target) reports a uniform profile.  Fixed
    seeds give byte-identical importances regardless of ``jobs``.
    """
    from sklearn.ensemble import RandomForestRegressor

    target, features = _resolve(table, target, features)
    X = table.frame[list(features)].to_numpy(dtype=float)
    y = table.frame[target].to_numpy(dtype=float)
    n, d = X.shape
    if n < 5:
        raise InsufficientDataError(f"random forest needs at least 5 rows, got {n}")
    forest = RandomForestRegressor(
        n_estimators=trees,
        max_depth=max_depth,
        min_samples_leaf=min_leaf,
        # sklearn floors fractional max_features; pass the ceiling explicitly
        max_features=max(1, math.ceil(d / 3)),
        random_state=seed,
        n_jobs=jobs,
    )
    forest.fit(X, y)
    raw = forest.feature_importances_
    total = float(raw.sum())
    if total > 0.0:
        imps = {f: float(v) / total for f, v in zip(features, raw)}
    else:
        imps = {f: 1.0 / d for f in features}
    return RegressionReport(
        model="rf",
        coefficients={},
        r_squared=float(forest.score(X, y)),
        n_rows=n,
        importances=imps,
    )


# ---------------------------------------------------------------------------
# combined report


def summary_frame(
    table: DeterminantsTable,
    reports: dict[str, RegressionReport],
    include_correlations: bool = True,
) -> pd.DataFrame:
    """Wide per-feature table: correlations plus one column block per model."""
    rows = {}
    for f in table.features:
        row: dict[str, float | str] = {}
        if include_correlations:
            x = table.frame[f].to_numpy()
            y = table.frame[table.target].to_numpy()
            row["spearman_rho"], row["spearman_p"] = spearman(x, y)
            row["pearson_r"], row["pearson_p"] = pearson(x, y)
        if "ols" in reports:
            c = reports["ols"].coefficients.get(f)
            row["ols_coef"] = c.estimate if c else ""
            row["ols_se"] = c.std_error if c else ""
            row["ols_p"] = c.p_value if c else ""
        if "stepwise" in reports:
            c = reports["stepwise"].coefficients.get(f)
            row["stepwise_coef"] = c.estimate if c else ""
        if "ridge" in reports:
            c = reports["ridge"].coefficients.get(f)
            row["ridge_coef"] = c.estimate if c else ""
        if "rf" in reports:
            row["rf_importance"] = reports["rf"].importances.get(f, "")
        rows[f] = row
    return pd.DataFrame.from_dict(rows, orient="index").rename_axis("feature")
