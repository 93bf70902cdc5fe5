"""Named parameter blocks with constraint transforms.

A ParameterSpace is an ordered list of blocks; each block maps a slice of the
unconstrained sampling vector to constrained values (reals, positives, an
interval, or a correlation matrix) and contributes the log-Jacobian of its
transform.  Targets are evaluated on the unconstrained scale; recorded draws
are on the constrained scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from lapbayes.corrmats import (
    corr_transform_detailed,
    corr_transform_inverse,
    n_pairs,
    pair_order,
)
from lapbayes.errors import ConfigurationError

CONSTRAINTS = ("real", "positive", "interval", "correlation", "anchored_location")


@dataclass(frozen=True)
class Block:
    """One named slice of the sampling vector with its constraint transform.

    ``anchored_location`` is the non-centered location transform
    x = loc + u / sqrt(scale_mult * anchor): the anchor names an earlier
    positive block (a precision), so location/precision funnels sample as
    independent standard normals.  Draws are still recorded as x.
    """

    name: str
    constraint: str = "real"
    size: int = 1
    lo: float = 0.0
    hi: float = 1.0
    k: int = 0  # correlation blocks only
    anchor: str = ""  # anchored_location: name of the positive block
    loc: tuple = ()
    scale_mult: tuple = ()
    center: tuple = ()  # real/positive: affine recentering of the sampling scale
    spread: tuple = ()

    def __post_init__(self):
        if self.constraint not in CONSTRAINTS:
            raise ConfigurationError(f"unknown constraint {self.constraint!r}")
        if self.center and len(self.center) != self.size:
            raise ConfigurationError("center must match the block size")
        if self.spread:
            if len(self.spread) != self.size:
                raise ConfigurationError("spread must match the block size")
            if any(s <= 0 for s in self.spread):
                raise ConfigurationError("spread entries must be positive")
        if self.constraint == "interval" and not self.lo < self.hi:
            raise ConfigurationError(f"interval block needs lo < hi, got ({self.lo}, {self.hi})")
        if self.constraint == "correlation" and self.k < 2:
            raise ConfigurationError("correlation block needs k >= 2")
        if self.constraint != "correlation" and self.size < 1:
            raise ConfigurationError("block size must be >= 1")
        if self.constraint == "anchored_location":
            if not self.anchor:
                raise ConfigurationError("anchored_location needs an anchor block name")
            if len(self.loc) != self.size or len(self.scale_mult) != self.size:
                raise ConfigurationError(
                    "anchored_location needs loc and scale_mult of the block size"
                )

    @property
    def dim(self) -> int:
        if self.constraint == "correlation":
            return n_pairs(self.k)
        return self.size

    def column_names(self) -> list[str]:
        if self.constraint == "correlation":
            return [f"{self.name}_{i}_{j}" for i, j in pair_order(self.k)]
        if self.size == 1:
            return [self.name]
        return [f"{self.name}_{i + 1}" for i in range(self.size)]


class ParameterSpace:
    """Ordered constrained parameter blocks over one flat unconstrained vector."""

    def __init__(self, blocks):
        self.blocks = tuple(blocks)
        if not self.blocks:
            raise ConfigurationError("parameter space needs at least one block")
        names = [b.name for b in self.blocks]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate block names in {names}")
        self._offsets = []
        off = 0
        seen = set()
        for b in self.blocks:
            if b.constraint == "anchored_location" and b.anchor not in seen:
                raise ConfigurationError(
                    f"block {b.name!r} anchors on {b.anchor!r}, which must come first"
                )
            seen.add(b.name)
            self._offsets.append(off)
            off += b.dim
        self.dim = off

    def constrain(self, u: np.ndarray):
        """Unconstrained vector -> (params dict, total log-Jacobian).

        Correlation blocks yield the full matrix; other blocks yield arrays
        (scalars for size-1 blocks).  Correlation blocks additionally stash
        their canonical partial correlations and the Cholesky part of the
        Jacobian under the underscore keys "_<name>_cpc" and
        "_<name>_cpc_jac" for priors defined on the CPC scale.
        """
        u = np.asarray(u, dtype=float)
        params: dict[str, object] = {}
        log_jac = 0.0
        for block, off in zip(self.blocks, self._offsets):
            seg = u[off : off + block.dim]
            if block.constraint in ("real", "positive") and (block.center or block.spread):
                # affine recentering of the sampling coordinates (constant Jacobian)
                c = np.asarray(block.center) if block.center else 0.0
                s = np.asarray(block.spread) if block.spread else 1.0
                seg = c + s * seg
                if block.spread:
                    log_jac += float(np.sum(np.log(s)))
            if block.constraint == "real":
                params[block.name] = seg.copy() if block.size > 1 else float(seg[0])
            elif block.constraint == "positive":
                x = np.exp(seg)
                log_jac += float(seg.sum())
                params[block.name] = x if block.size > 1 else float(x[0])
            elif block.constraint == "interval":
                width = block.hi - block.lo
                x = block.lo + width * expit(seg)
                log_jac += float(
                    np.sum(math.log(width) + log_expit(seg) + log_expit(-seg))
                )
                params[block.name] = x if block.size > 1 else float(x[0])
            elif block.constraint == "anchored_location":
                anchor = np.atleast_1d(np.asarray(params[block.anchor], dtype=float))
                s = np.sqrt(np.asarray(block.scale_mult) * anchor)
                x = np.asarray(block.loc) + seg / s
                log_jac += float(-np.sum(np.log(s)))
                params[block.name] = x if block.size > 1 else float(x[0])
            else:
                R, z, jac_tanh, jac_chol = corr_transform_detailed(seg, block.k)
                log_jac += jac_tanh + jac_chol
                params[block.name] = R
                params[f"_{block.name}_cpc"] = z
                params[f"_{block.name}_cpc_jac"] = jac_chol
        return params, log_jac

    def unconstrain(self, params: dict) -> np.ndarray:
        u = np.empty(self.dim)
        for block, off in zip(self.blocks, self._offsets):
            val = params[block.name]
            if block.constraint == "real":
                seg = np.atleast_1d(np.asarray(val, dtype=float))
                u[off : off + block.dim] = self._decenter(block, seg)
            elif block.constraint == "positive":
                seg = np.log(np.atleast_1d(np.asarray(val, dtype=float)))
                u[off : off + block.dim] = self._decenter(block, seg)
            elif block.constraint == "interval":
                x = np.asarray(val, dtype=float)
                t = (x - block.lo) / (block.hi - block.lo)
                u[off : off + block.dim] = np.log(t) - np.log1p(-t)
            elif block.constraint == "anchored_location":
                anchor = np.atleast_1d(np.asarray(params[block.anchor], dtype=float))
                s = np.sqrt(np.asarray(block.scale_mult) * anchor)
                u[off : off + block.dim] = (np.asarray(val, dtype=float) - np.asarray(block.loc)) * s
            else:
                u[off : off + block.dim] = corr_transform_inverse(np.asarray(val))
        return u

    @staticmethod
    def _decenter(block: Block, seg: np.ndarray) -> np.ndarray:
        if not (block.center or block.spread):
            return seg
        c = np.asarray(block.center) if block.center else 0.0
        s = np.asarray(block.spread) if block.spread else 1.0
        return (seg - c) / s

    def column_names(self) -> list[str]:
        names: list[str] = []
        for b in self.blocks:
            names.extend(b.column_names())
        return names

    def flatten_constrained(self, params: dict) -> np.ndarray:
        """Constrained values as one flat row matching column_names()."""
        out = np.empty(self.dim)
        pos = 0
        for block in self.blocks:
            val = params[block.name]
            if block.constraint == "correlation":
                R = np.asarray(val)
                for a, b in pair_order(block.k):
                    out[pos] = R[a - 1, b - 1]
                    pos += 1
            else:
                arr = np.atleast_1d(np.asarray(val, dtype=float))
                out[pos : pos + arr.size] = arr
                pos += arr.size
        return out

    def check_roundtrip(self, u: np.ndarray, tol: float = 1e-10) -> bool:
        params, _ = self.constrain(u)
        return bool(np.max(np.abs(self.unconstrain(params) - u)) < tol)
