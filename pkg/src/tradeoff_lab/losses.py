"""Least-squares, KL and 0/1 losses with their certificate pairs (A, B).

A certificate pair makes both pairwise conditions hold:

    l(u, v) + l(u', v') + A(u, u') >= B(v, v')
    l(u, v) + l(u', v') + A(v, v') >= B(u, u')

LS arguments are scalars (any shape, elementwise). KL and 0/1 arguments are
k-vectors on the last axis.
"""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.special import rel_entr

__all__ = [
    "LossKind",
    "PairCheck",
    "eval_loss",
    "eval_A",
    "eval_B",
    "check_pair_conditions",
    "unique_argmax",
    "NO_UNIQUE_MAX",
]

PAIR_TOL = 1e-12
SIMPLEX_TOL = 1e-9
NO_UNIQUE_MAX = -1


class LossKind(str, Enum):
    LS = "LS"
    KL = "KL"
    ZERO_ONE = "ZERO_ONE"


class PairCheck(NamedTuple):
    cond1: np.ndarray | bool
    cond2: np.ndarray | bool
    slack1: np.ndarray | float
    slack2: np.ndarray | float


def unique_argmax(u) -> np.ndarray:
    """Index of the strictly largest entry, or ``NO_UNIQUE_MAX`` on ties."""
    u = np.asarray(u, dtype=np.float64)
    idx = np.argmax(u, axis=-1)
    top = np.take_along_axis(u, idx[..., None], axis=-1)
    ties = (u == top).sum(axis=-1) > 1
    return np.where(ties, NO_UNIQUE_MAX, idx)


def _vec_pair(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape[-1:] != v.shape[-1:]:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if u.shape[-1] < 2:
        raise ValueError("classification losses need k >= 2")
    return u, v


def _check_simplex(w, open_: bool, name: str):
    s = w.sum(axis=-1)
    if np.any(np.abs(s - 1.0) > SIMPLEX_TOL):
        raise ValueError(f"{name} is not on the simplex (sum off by > {SIMPLEX_TOL})")
    if open_:
        if np.any(w <= 0):
            raise ValueError(f"{name} must be strictly positive (open simplex)")
    elif np.any(w < 0):
        raise ValueError(f"{name} has negative entries")


def _zero_one(u, v):
    u, v = _vec_pair(u, v)
    same = np.all(u == v, axis=-1)
    iu = unique_argmax(u)
    iv = unique_argmax(v)
    agree = (iu == iv) & (iu != NO_UNIQUE_MAX)
    return np.where(same | agree, 0.0, 1.0)


def _sq_l1(u, v):
    u, v = _vec_pair(u, v)
    return np.abs(u - v).sum(axis=-1) ** 2


def _ls_sq(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape and u.size != 1 and v.size != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return (u - v) ** 2


def eval_loss(kind: LossKind, u, v):
    """Loss of prediction ``u`` against target ``v``."""
    kind = LossKind(kind)
    if kind is LossKind.LS:
        return _ls_sq(u, v) / 2
    if kind is LossKind.KL:
        u, v = _vec_pair(u, v)
        _check_simplex(u, True, "KL prediction")
        _check_simplex(v, False, "KL target")
        return rel_entr(v, u).sum(axis=-1)
    return _zero_one(u, v)


def eval_A(kind: LossKind, u, v):
    kind = LossKind(kind)
    if kind is LossKind.LS:
        return _ls_sq(u, v) / 2
    if kind is LossKind.KL:
        return _sq_l1(u, v) / 2
    return _zero_one(u, v)


def eval_B(kind: LossKind, u, v):
    kind = LossKind(kind)
    if kind is LossKind.LS:
        return _ls_sq(u, v) / 6
    if kind is LossKind.KL:
        return _sq_l1(u, v) / 6
    return _zero_one(u, v)


def check_pair_conditions(kind: LossKind, u, v, u2, v2) -> PairCheck:
    """Evaluate both pairwise conditions; slacks are LHS - RHS."""
    base = eval_loss(kind, u, v) + eval_loss(kind, u2, v2)
    slack1 = base + eval_A(kind, u, u2) - eval_B(kind, v, v2)
    slack2 = base + eval_A(kind, v, v2) - eval_B(kind, u, u2)
    return PairCheck(slack1 >= -PAIR_TOL, slack2 >= -PAIR_TOL, slack1, slack2)
