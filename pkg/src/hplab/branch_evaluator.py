"""Pointwise evaluation of f on the three sheets and branch-tracked
continuation along paths.

The square-root product w(t) = prod_j sqrt((A_j - t)/(B_j - t)) composed
with t = 1/phi(z) or t = phi(z) realizes the three branches of the
algebraic function over the z-plane:

  sheet 0: t = 1/phi(z), the continuation of the expansion at infinity,
           single valued off E = [-1, 1];
  sheet 1: t = phi(z), reached by crossing E once, single valued off
           E and F;
  sheet 2: the sheet-1 value with the product root negated, reached by
           crossing F once; only trusted inside the annular region
           around F where the level curves of the Green potential live
           (callers supply that region test).

In the real regime each factor (A_j - t)/(B_j - t) only meets the
negative real axis when t lies on the real segment (A_j, B_j), which is
the phi-image of F_j.  The per-factor principal square root is therefore
continuous off E and F, and a single cached sign per factor pins sheet 1
globally.  That anchor sign is computed once per spec by an actual
continuation from 2i across E at the origin to -2i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

from mpmath import mp

from .errors import ContinuationError, OnCutError, ValidationError
from .precision import PrecisionContext
from .series_engine import FunctionSpec, evaluate_expression_at

_VALID_SHEETS = (0, 1, 2)


@dataclass(frozen=True)
class BranchValue:
    """Value of the square-root product w at a point, with branch data.

    zhukovskii_branch: 'inner' when the tracked t satisfies |t| < 1
    (the branch of 1/phi), 'outer' for |t| > 1.
    sign_state: per-factor sign relative to the principal square root
    of (A_j - t)/(B_j - t) at this point.
    """

    value: object
    zhukovskii_branch: str
    sign_state: Tuple[int, ...]


def segment_distance(z, a, b) -> object:
    """Distance from z to the real segment [a, b]."""
    x, y = mp.re(z), mp.im(z)
    if x < a:
        return mp.hypot(x - a, y)
    if x > b:
        return mp.hypot(x - b, y)
    return abs(y)


def _phi_raw(z):
    """phi(z) = z + sqrt(z-1)*sqrt(z+1) without the on-cut guard.

    The split form keeps the principal-branch cut exactly on E and
    selects the branch with phi(z)/z -> 2 at infinity.  On E itself it
    returns the boundary value from the upper half-plane.
    """
    phi = z + mp.sqrt(z - 1) * mp.sqrt(z + 1)
    return phi, 1 / phi


def eval_inverse_zhukovskii(z, ctx: PrecisionContext):
    """phi(z) with |phi| > 1 and its reciprocal; rejects points on E."""
    with ctx.workprec(16):
        z = mp.mpmathify(z)
        tol = ctx.tolerance(2)
        if segment_distance(z, -1, 1) < tol:
            raise OnCutError(f"z = {mp.nstr(z, 12)} lies on the cut [-1, 1]")
        return _phi_raw(z)


def condenser_segments(spec: FunctionSpec):
    """Images [a_j, b_j] of the branch pairs under (t + 1/t)/2."""
    segs = []
    for a_, b_ in spec.pairs:
        segs.append(((a_ + 1 / a_) / 2, (b_ + 1 / b_) / 2))
    return segs


def _factor_principal(pairs, t):
    """Principal square roots of (A_j - t)/(B_j - t) at one point."""
    return [mp.sqrt((a - t) / (b - t)) for a, b in pairs]


_ANCHOR_CACHE: dict = {}


def _sheet1_anchor(spec: FunctionSpec, ctx: PrecisionContext) -> Tuple[int, ...]:
    """Per-factor signs on sheet 1, fixed by one reference continuation.

    The path runs from 2i (sheet 0) straight through the origin to -2i,
    crossing E exactly once.  Deterministic and cached per spec.
    """
    cached = _ANCHOR_CACHE.get(spec)
    if cached is not None:
        return cached
    start = branch_point_value(spec, mp.mpc(0, 2), 0, ctx)
    path = [mp.mpc(0, 2), mp.mpc(0, "0.4"), mp.mpc(0, "-0.4"), mp.mpc(0, -2)]
    end = continue_along_path(spec, path, start, ctx)
    if end.zhukovskii_branch != "outer":
        raise ContinuationError("anchor continuation failed to change branch")
    _ANCHOR_CACHE[spec] = end.sign_state
    return end.sign_state


def branch_point_value(spec: FunctionSpec, z, sheet: int,
                       ctx: PrecisionContext,
                       sheet2_region: Optional[Callable] = None) -> BranchValue:
    """BranchValue of the square-root product w at z on the given sheet."""
    if sheet not in _VALID_SHEETS:
        raise ValidationError(f"sheet must be one of {_VALID_SHEETS}")
    if sheet > 0 and spec.regime != "real":
        raise ValidationError(
            "sheets 1 and 2 are defined only for real-regime specs")
    if sheet == 2 and spec.m == 0:
        raise ValidationError("sheet 2 needs at least one branch pair")
    with ctx.workprec(16):
        z = mp.mpmathify(z)
        tol = ctx.tolerance(2)
        if z == mp.inf:
            if sheet != 0:
                raise ValidationError("only sheet 0 extends to infinity")
            return BranchValue(spec.value_at_infinity(), "inner",
                              (1,) * spec.m)
        phi, phi_inv = eval_inverse_zhukovskii(z, ctx)
        if sheet == 0:
            t = phi_inv
            w = mp.one
            for p in _factor_principal(spec.pairs, t):
                w *= p
            return BranchValue(w, "inner", (1,) * spec.m)
        for a, b in condenser_segments(spec):
            if segment_distance(z, a, b) < tol:
                raise OnCutError(
                    f"z = {mp.nstr(z, 12)} lies on the cut [{mp.nstr(a, 8)}, "
                    f"{mp.nstr(b, 8)}]")
        if sheet == 2 and sheet2_region is not None and not sheet2_region(z):
            raise ValidationError(
                f"z = {mp.nstr(z, 12)} is outside the sheet-2 validity "
                "region")
        signs = _sheet1_anchor(spec, ctx)
        w = mp.one
        for s, p in zip(signs, _factor_principal(spec.pairs, phi)):
            w *= s * p
        if sheet == 1:
            return BranchValue(w, "outer", signs)
        # crossing F flips exactly one factor root; which one depends on
        # the path, the value does not, so fix the first by convention
        flipped = (-signs[0],) + signs[1:]
        return BranchValue(-w, "outer", flipped)


def eval_sheet(spec: FunctionSpec, z, sheet: int, ctx: PrecisionContext,
               sheet2_region: Optional[Callable] = None):
    """f(z^(sheet)): the spec's expression evaluated at (z, w on sheet)."""
    bv = branch_point_value(spec, z, sheet, ctx, sheet2_region)
    with ctx.workprec(16):
        return evaluate_expression_at(spec.expression, mp.mpmathify(z),
                                      bv.value)


def branch_points(spec: FunctionSpec):
    """The set Sigma = {-1, 1} U {a_j, b_j}."""
    pts = [mp.mpf(-1), mp.mpf(1)]
    for a, b in condenser_segments(spec):
        pts.extend((a, b))
    return pts


def continue_along_path(spec: FunctionSpec, path: Sequence, start: BranchValue,
                        ctx: PrecisionContext,
                        clearance: Optional[object] = None,
                        step_budget: int = 200000) -> BranchValue:
    """Continue a branch value along a polygonal path.

    Each accepted step keeps every factor's phase increment below pi/2
    and the Zhukovskii variable t on the branch nearer its previous
    value; segments violating either condition are bisected.  Paths must
    stay clear of the branch points Sigma.
    """
    if len(path) < 2:
        raise ValidationError("path needs at least two points")
    with ctx.workprec(16):
        pts = [mp.mpmathify(p) for p in path]
        sigma = branch_points(spec)
        diam = max(abs(p - q) for p in sigma for q in sigma) if len(sigma) > 1 \
            else mp.one
        clear = clearance if clearance is not None else mp.mpf("1e-4") * diam
        for seg_a, seg_b in zip(pts, pts[1:]):
            for bp in sigma:
                if _point_segment_distance(bp, seg_a, seg_b) < clear:
                    raise ContinuationError(
                        f"path passes within {mp.nstr(clear, 6)} of branch "
                        f"point {mp.nstr(bp, 8)}")

        phi, phi_inv = _phi_raw(pts[0])
        t = phi_inv if start.zhukovskii_branch == "inner" else phi
        ws = [s * p for s, p in
              zip(start.sign_state, _factor_principal(spec.pairs, t))]

        steps = 0
        for seg_a, seg_b in zip(pts, pts[1:]):
            stack = [(seg_a, seg_b)]
            while stack:
                a, b = stack.pop()
                steps += 1
                if steps > step_budget:
                    raise ContinuationError(
                        "step refinement budget exceeded; path too close to "
                        "a branch point or too coarse")
                ok, t_new, ws_new = _try_step(spec.pairs, t, ws, b, ctx)
                if ok:
                    t, ws = t_new, ws_new
                else:
                    mid = (a + b) / 2
                    if abs(b - a) < mp.ldexp(1, -ctx.precision_bits // 2):
                        raise ContinuationError(
                            "cannot refine step further near "
                            f"{mp.nstr(mid, 10)}")
                    stack.append((mid, b))
                    stack.append((a, mid))

        branch = "inner" if abs(t) < 1 else "outer"
        signs = []
        value = mp.one
        for w, p in zip(ws, _factor_principal(spec.pairs, t)):
            signs.append(1 if abs(w - p) <= abs(w + p) else -1)
            value *= w
        return BranchValue(value, branch, tuple(signs))


def _try_step(pairs, t_old, ws_old, z_old, z_new, ctx):
    # Step-length rule: |dz| below a quarter of the distance to the
    # Zhukovskii branch points +-1 bounds the true travel of t by a
    # small fraction of the branch separation |t - 1/t|, so picking the
    # candidate nearest the previous t is provably the continuation.
    # Continuation legitimately crosses E, hence no on-cut guard here.
    d_sing = min(abs(z_old - 1), abs(z_old + 1),
                 abs(z_new - 1), abs(z_new + 1))
    if abs(z_new - z_old) > mp.mpf("0.25") * d_sing:
        return False, None, None
    phi, phi_inv = _phi_raw(z_new)
    t_new = phi if abs(phi - t_old) <= abs(phi_inv - t_old) else phi_inv
    step = abs(t_new - t_old)
    sep = min(abs(t_old - 1 / t_old), abs(t_new - 1 / t_new))
    if sep > 0 and step > mp.mpf("0.35") * sep:
        return False, None, None
    ws_new = []
    for (a, b), w_old in zip(pairs, ws_old):
        r_new = (a - t_new) / (b - t_new)
        r_old = w_old * w_old
        ratio = r_new / r_old
        if mp.re(ratio) <= 0:
            return False, None, None  # phase step would reach pi/2
        p = mp.sqrt(r_new)
        ws_new.append(p if abs(p - w_old) <= abs(p + w_old) else -p)
    return True, t_new, ws_new


def _point_segment_distance(p, a, b):
    ab = b - a
    denom = mp.re(ab) ** 2 + mp.im(ab) ** 2
    if denom == 0:
        return abs(p - a)
    s = (mp.re(p - a) * mp.re(ab) + mp.im(p - a) * mp.im(ab)) / denom
    s = max(0, min(1, s))
    return abs(p - (a + s * ab))


def product_identity(spec: FunctionSpec, z):
    """prod_j (A_j^2 - 2 A_j z + 1)/(B_j^2 - 2 B_j z + 1).

    Equals (w(z^(0)) w(z^(1)))^2 because phi + 1/phi = 2z; used as the
    independent oracle for sheet evaluation.
    """
    v = mp.one
    for a, b in spec.pairs:
        v *= (a * a - 2 * a * z + 1) / (b * b - 2 * b * z + 1)
    return v
