"""Ridge and PLS regression on z-scored features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LinearModel", "fit_ridge", "fit_plsr"]


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``y = ((x - x_mean) / x_scale) @ coef + intercept``."""

    coef: np.ndarray
    intercept: float
    x_mean: np.ndarray
    x_scale: np.ndarray

    def predict(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.x_mean) / self.x_scale
        return Z @ self.coef + self.intercept

    @property
    def raw_coef(self) -> np.ndarray:
        """Coefficients on the unstandardized features."""
        return self.coef / self.x_scale

    def to_dict(self) -> dict:
        return {
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearModel":
        return cls(
            coef=np.asarray(doc["coef"], dtype=np.float64),
            intercept=float(doc["intercept"]),
            x_mean=np.asarray(doc["x_mean"], dtype=np.float64),
            x_scale=np.asarray(doc["x_scale"], dtype=np.float64),
        )


def _standardize(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    return (X - mean) / scale, mean, scale


def fit_ridge(X, y, alpha: float) -> LinearModel:
    """Penalized least squares, solved as an augmented least-squares problem."""
    Z, mean, scale = _standardize(X)
    y_mean = float(np.mean(y))
    p = Z.shape[1]
    A = np.vstack([Z, np.sqrt(alpha) * np.eye(p)])
    b = np.concatenate([y - y_mean, np.zeros(p)])
    coef = np.linalg.lstsq(A, b, rcond=None)[0]
    return LinearModel(coef=coef, intercept=y_mean, x_mean=mean, x_scale=scale)


def fit_plsr(X, y, n_components: int) -> LinearModel:
    """PLS1 by NIPALS; stops early once the residual target is exhausted."""
    Z, mean, scale = _standardize(X)
    y_mean = float(np.mean(y))
    E = Z.copy()
    f = y - y_mean
    W, P, Q = [], [], []
    tol = 1e-12 * max(1.0, float(np.linalg.norm(Z.T @ (y - y_mean))))
    for _ in range(n_components):
        w = E.T @ f
        norm = np.linalg.norm(w)
        if norm <= tol:
            break
        w = w / norm
        t = E @ w
        tt = float(t @ t)
        p = E.T @ t / tt
        q = float(f @ t) / tt
        E = E - np.outer(t, p)
        f = f - q * t
        W.append(w)
        P.append(p)
        Q.append(q)
    if not W:
        coef = np.zeros(Z.shape[1])
    else:
        W, P, Q = np.array(W).T, np.array(P).T, np.array(Q)
        coef = W @ np.linalg.solve(P.T @ W, Q)
    return LinearModel(coef=coef, intercept=y_mean, x_mean=mean, x_scale=scale)
