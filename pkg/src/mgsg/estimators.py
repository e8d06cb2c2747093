"""Estimator-style wrappers around the resolvent and the heat semigroup.

Samples are rows of a 2-d array; the columns are the grid values of a
graph function, edge by edge in graph order.  ``fit`` only lays out the
grid, so the wrappers can sit inside an sklearn ``Pipeline``.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .functions import GraphFunction
from .resolvent import GreenKernelParts, resolvent_apply
from .semigroup import evolve_fd_oracle, evolve_spectral
from .validation import check_kappa, check_spec


class _GraphTransformer(TransformerMixin, BaseEstimator):

    def _layout(self):
        self.graph_, self.bc_ = check_spec(self.spec)
        x_max = self.x_max if self.graph_.n_external else None
        self.template_ = GraphFunction.constant(self.graph_, 0.0, h=self.h, x_max=x_max)
        self.n_features_in_ = self.template_.n_samples

    def fit(self, X=None, y=None):
        """Lay out the grid; ``X`` is only checked for its width."""
        self._layout()
        if X is not None:
            self._check_X(X)
        return self

    def _check_X(self, X):
        X = check_array(X, dtype=[np.float64, np.complex128])
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def grid_nodes(self):
        """Edge id and position of every feature column."""
        check_is_fitted(self, "template_")
        return [(e, x) for e in self.graph_.edge_ids for x in self.template_.nodes(e)]

    def transform(self, X):
        check_is_fitted(self, "template_")
        X = self._check_X(X)
        rows = [self._apply(self.template_.unflat(row)).flat() for row in X]
        out = np.vstack(rows)
        if not np.iscomplexobj(X) and np.allclose(out.imag, 0, atol=1e-12):
            out = out.real
        return out


class ResolventTransformer(_GraphTransformer):
    """Apply ``(kappa^2 - Delta)^{-1}`` to sampled graph functions.

    Parameters
    ----------
    spec : str, dict or tuple
        Spec file, parsed document or ``(graph, conditions)``.
    kappa : float
        The spectral parameter is ``k = i kappa``.
    h : float
        Grid step.
    x_max : float
        Truncation of external edges.
    """

    def __init__(self, spec=None, kappa=1.0, h=1e-2, x_max=10.0):
        self.spec = spec
        self.kappa = kappa
        self.h = h
        self.x_max = x_max

    def fit(self, X=None, y=None):
        check_kappa(self.kappa)
        super().fit(X, y)
        self.parts_ = GreenKernelParts.build(self.graph_, self.bc_, 1j * self.kappa)
        return self

    def _apply(self, psi):
        return resolvent_apply(self.graph_, self.bc_, 1j * self.kappa, psi, parts=self.parts_)


class HeatSemigroup(_GraphTransformer):
    """Apply ``exp(t Delta)`` to sampled graph functions.

    Parameters
    ----------
    spec : str, dict or tuple
    t : float
        Time.
    method : {"spectral", "fd"}
    h, x_max : float
    """

    def __init__(self, spec=None, t=0.1, method="spectral", h=1e-2, x_max=10.0):
        self.spec = spec
        self.t = t
        self.method = method
        self.h = h
        self.x_max = x_max

    def fit(self, X=None, y=None):
        check_kappa(self.t, "t")
        if self.method not in ("spectral", "fd"):
            raise ValueError(f"unknown method {self.method!r}")
        return super().fit(X, y)

    def _apply(self, psi):
        if self.method == "spectral":
            return evolve_spectral(self.graph_, self.bc_, psi, self.t)
        return evolve_fd_oracle(self.graph_, self.bc_, psi, self.t)
