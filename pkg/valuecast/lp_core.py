"""
Dense linear programming with dual certificates and a branch-and-bound layer for
mixed-integer problems.

Problems are stated as

    min c'v  s.t.  A_eq v = b_eq,  A_ub v <= b_ub,  lower <= v <= upper

and solved by a two-phase revised simplex method that keeps box bounds implicit.
Dual sign convention of the returned certificate:

    eq_duals y     free, one per equality row
    ineq_duals pi  >= 0, one per inequality row
    lower_duals    >= 0, active lower bounds
    upper_duals    >= 0, active upper bounds

so that c = A_eq'y - A_ub'pi + lower_duals - upper_duals and, at an optimum,
c'v* = b_eq'y - b_ub'pi + lower'lower_duals - upper'upper_duals.
At degenerate optima the duals are those of the terminal basis.
"""

import heapq
import logging
import math
from collections import namedtuple
from enum import Enum
from pathlib import Path
import numpy as np
import scipy.linalg
from .errors import (
    SolverError,
    MalformedProblem,
    NumericalFailure,
    InfeasibleProblem,
    NodeBudgetExceeded,
)
from .settings import config
from .utils import safe_write_text

logger = logging.getLogger(__name__.split(".")[0])

TOL_FEAS = 1e-8
TOL_GAP = 1e-8
TOL_CS = 1e-8
TOL_DUAL = 1e-9
TOL_STEP = 1e-12
# pivots are measured against the largest |alpha| of the entering column
TOL_PIVOT = 1e-9
TOL_PIVOT_REFACTOR = 1e-5
# basic values may cross a bound by this much in the first ratio-test pass
TOL_HARRIS = 1e-9
TOL_RESIDUAL = 1e-9
TOL_RANK = 1e-11
MAX_CONDITION = 1e12
MAX_RESTARTS = 3


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


# nonbasic position of a column
_BASIC, _AT_LOWER, _AT_UPPER, _FREE = 0, 1, 2, 3


def _as_matrix(rows, n, name):
    if rows is None:
        return np.zeros((0, n))
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1 and rows.size == 0:
        return np.zeros((0, n))
    if rows.ndim != 2:
        raise MalformedProblem("%s must be a 2-d array of rows" % name)
    return rows


def _as_vector(values, n, fill, name):
    if values is None:
        return np.full(n, fill, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim == 0:
        return np.full(n, float(values))
    if values.ndim != 1:
        raise MalformedProblem("%s must be a vector" % name)
    return values


class LinearProgram:
    """
    A dense LP instance. Missing parts default to no rows and non-negative variables.

    :param c: objective coefficients, one per variable
    :param A_eq: equality rows (m_eq x n) with right-hand side b_eq
    :param A_ub: less-or-equal rows (m_ub x n) with right-hand side b_ub
    :param lower: lower bounds, -inf for unbounded (default 0)
    :param upper: upper bounds, +inf for unbounded (default +inf)
    :param names: optional variable names used by format_lp
    """

    def __init__(
        self,
        c,
        A_eq=None,
        b_eq=None,
        A_ub=None,
        b_ub=None,
        lower=None,
        upper=None,
        names=None,
    ):
        self.c = np.asarray(c, dtype=float).ravel()
        n = self.c.size
        self.A_eq = _as_matrix(A_eq, n, "A_eq")
        self.b_eq = _as_vector(b_eq, 0, 0.0, "b_eq")
        self.A_ub = _as_matrix(A_ub, n, "A_ub")
        self.b_ub = _as_vector(b_ub, 0, 0.0, "b_ub")
        self.lower = _as_vector(lower, n, 0.0, "lower")
        self.upper = _as_vector(upper, n, np.inf, "upper")
        self.names = list(names) if names is not None else None
        self.validate()

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_rows(self):
        return self.A_eq.shape[0] + self.A_ub.shape[0]

    def validate(self):
        n = self.n_vars
        for name, rows, rhs in (
            ("A_eq", self.A_eq, self.b_eq),
            ("A_ub", self.A_ub, self.b_ub),
        ):
            if rows.shape[1] != n:
                raise MalformedProblem(
                    "{name} has {cols} columns for {n} variables".format(
                        name=name, cols=rows.shape[1], n=n
                    )
                )
            if rhs.shape != (rows.shape[0],):
                raise MalformedProblem(
                    "{name} has {m} rows but {k} right-hand side values".format(
                        name=name, m=rows.shape[0], k=rhs.size
                    )
                )
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise MalformedProblem("Bounds must hold one value per variable")
        if self.names is not None and len(self.names) != n:
            raise MalformedProblem("Names must hold one value per variable")
        if np.isnan(self.lower).any() or np.isnan(self.upper).any():
            raise MalformedProblem("Bounds must not be NaN")
        if not (
            np.isfinite(self.c).all()
            and np.isfinite(self.A_eq).all()
            and np.isfinite(self.A_ub).all()
            and np.isfinite(self.b_eq).all()
            and np.isfinite(self.b_ub).all()
        ):
            raise MalformedProblem("Objective, rows and right-hand sides must be finite")
        bad = np.flatnonzero(self.lower > self.upper)
        if bad.size:
            raise MalformedProblem(
                "Variable %d has lower bound above its upper bound" % bad[0]
            )
        if (self.lower == np.inf).any() or (self.upper == -np.inf).any():
            raise MalformedProblem("Bounds must not exclude every finite value")

    def with_bounds(self, lower, upper):
        """
        :return: a copy of this LP with replaced variable bounds
        """
        return LinearProgram(
            self.c,
            self.A_eq,
            self.b_eq,
            self.A_ub,
            self.b_ub,
            lower=lower,
            upper=upper,
            names=self.names,
        )

    def objective(self, v):
        return float(self.c @ v)

    def __repr__(self):
        return "LinearProgram(%d variables, %d equality rows, %d inequality rows)" % (
            self.n_vars,
            self.A_eq.shape[0],
            self.A_ub.shape[0],
        )


class LpSolution(
    namedtuple(
        "_LpSolution",
        (
            "status",
            "x",
            "objective",
            "eq_duals",
            "ineq_duals",
            "lower_duals",
            "upper_duals",
            "iterations",
        ),
    )
):
    """
    Primal solution and dual certificate of a LinearProgram.
    Only `status` and `iterations` are set unless the status is OPTIMAL.
    """

    __slots__ = ()

    @property
    def optimal(self):
        return self.status is LpStatus.OPTIMAL

    def dual_objective(self, lp):
        """
        b_eq'y - b_ub'pi + lower'lower_duals - upper'upper_duals, skipping infinite bounds
        """
        lower = np.where(np.isfinite(lp.lower), lp.lower, 0.0)
        upper = np.where(np.isfinite(lp.upper), lp.upper, 0.0)
        return float(
            lp.b_eq @ self.eq_duals
            - lp.b_ub @ self.ineq_duals
            + lower @ self.lower_duals
            - upper @ self.upper_duals
        )

    def certificate_residuals(self, lp):
        """
        :return: dict of the largest primal infeasibility, dual infeasibility,
            duality gap and complementary slackness product of this solution
        """
        x = self.x
        slack = lp.b_ub - lp.A_ub @ x
        primal = max(
            np.abs(lp.A_eq @ x - lp.b_eq).max(initial=0.0),
            (-slack).max(initial=0.0),
            (lp.lower - x).max(initial=0.0),
            (x - lp.upper).max(initial=0.0),
        )
        stationarity = (
            lp.c
            - lp.A_eq.T @ self.eq_duals
            + lp.A_ub.T @ self.ineq_duals
            - self.lower_duals
            + self.upper_duals
        )
        dual = max(
            np.abs(stationarity).max(initial=0.0),
            (-self.ineq_duals).max(initial=0.0),
            (-self.lower_duals).max(initial=0.0),
            (-self.upper_duals).max(initial=0.0),
        )
        with np.errstate(invalid="ignore"):
            lower_gap = np.where(self.lower_duals != 0, x - lp.lower, 0.0)
            upper_gap = np.where(self.upper_duals != 0, lp.upper - x, 0.0)
        cs = max(
            np.abs(self.ineq_duals * slack).max(initial=0.0),
            np.abs(self.lower_duals * lower_gap).max(initial=0.0),
            np.abs(self.upper_duals * upper_gap).max(initial=0.0),
        )
        return dict(
            primal=float(primal),
            dual=float(dual),
            gap=abs(self.objective - self.dual_objective(lp)),
            complementary_slackness=float(cs),
        )


class MilpSolution(
    namedtuple(
        "_MilpSolution",
        ("solution", "relaxation_bound", "best_bound", "node_count", "gap"),
    )
):
    """
    Incumbent of a branch and bound run.
    relaxation_bound is the root LP objective, best_bound the proven lower bound at termination.
    """

    __slots__ = ()

    @property
    def objective(self):
        return self.solution.objective

    @property
    def x(self):
        return self.solution.x


class _Simplex:
    """
    Bounded-variable revised simplex over the columns [structural | slack | artificial]
    with an explicit basis inverse kept current by product-form updates.

    Rows are scaled so that their largest structural coefficient is 1. The inverse is
    rebuilt after a small pivot or when the basic values drift off the rows, and a singular
    or ill-conditioned basis is repaired with artificial columns.
    """

    def __init__(self, lp):
        n, m_eq, m_ub = lp.n_vars, lp.A_eq.shape[0], lp.A_ub.shape[0]
        m = m_eq + m_ub
        self.lp = lp
        self.n, self.m_eq, self.m_ub, self.m = n, m_eq, m_ub, m
        structural = np.vstack([lp.A_eq, lp.A_ub]) if m else np.zeros((0, n))
        scale = np.abs(structural).max(axis=1, initial=0.0)
        self.row_scale = np.where(scale > 0, scale, 1.0)
        structural = structural / self.row_scale[:, None]
        self.b = np.concatenate([lp.b_eq, lp.b_ub]) / self.row_scale
        slack = np.vstack([np.zeros((m_eq, m_ub)), np.eye(m_ub)])
        self.A = np.hstack([structural, slack, np.eye(m)])
        n_total = n + m_ub + m
        self.n_total = n_total
        self.lower = np.concatenate([lp.lower, np.zeros(m_ub), np.zeros(m)])
        self.upper = np.concatenate([lp.upper, np.full(m_ub, np.inf), np.zeros(m)])
        self.artificial = np.arange(n + m_ub, n_total)

        # nonbasic starting point: nearest finite bound to zero
        x = np.zeros(n_total)
        status = np.full(n_total, _AT_LOWER)
        lower_finite = np.isfinite(self.lower)
        upper_finite = np.isfinite(self.upper)
        x[:n] = np.where(
            lower_finite[:n],
            self.lower[:n],
            np.where(upper_finite[:n], self.upper[:n], 0.0),
        )
        status[:n] = np.where(
            lower_finite[:n], _AT_LOWER, np.where(upper_finite[:n], _AT_UPPER, _FREE)
        )
        residual = self.b - structural @ x[:n]

        # slacks start basic on satisfied rows, artificials elsewhere
        basis = np.empty(m, dtype=int)
        for i in range(m):
            if i >= m_eq and residual[i] >= 0:
                basis[i] = n + (i - m_eq)
            else:
                basis[i] = n + m_ub + i
                sign = 1.0 if residual[i] >= 0 else -1.0
                self.A[i, basis[i]] = sign
                self.upper[basis[i]] = np.inf
        status[basis] = _BASIC
        self.x, self.status, self.basis = x, status, basis
        self.iterations = 0
        self.repaired = False
        self.max_iterations = config.max_iterations(m, n_total)
        self.refactor_interval = config["solver.refactor_interval"]
        self.degenerate_threshold = config["solver.degenerate_threshold"]
        self.refactor()

    @property
    def _row_tolerance(self):
        return TOL_FEAS * (1.0 + np.abs(self.b).max(initial=0.0))

    def refactor(self):
        """
        Rebuild the basis inverse and recompute the basic values from the nonbasic ones.
        """
        self._since_refactor = 0
        if self.m == 0:
            self.B_inv = np.zeros((0, 0))
            return
        B_inv = self._invert(self.A[:, self.basis], MAX_CONDITION)
        if B_inv is None:
            replaced = self._repair(self.A[:, self.basis])
            B_inv = self._invert(self.A[:, self.basis], np.inf)
            if B_inv is None:
                raise NumericalFailure("Singular basis matrix after basis repair")
            self.B_inv = B_inv
            self._update_basic_values()
            # repaired artificials take the sign that makes their value non-negative
            for position in replaced:
                column = self.basis[position]
                if self.x[column] < 0:
                    self.A[:, column] *= -1.0
                    self.B_inv[position] *= -1.0
                    self.x[column] *= -1.0
            return
        self.B_inv = B_inv
        self._update_basic_values()

    @staticmethod
    def _invert(B, max_condition):
        """
        :return: the inverse of B, or None when B is singular or its 1-norm condition
            number exceeds max_condition
        """
        try:
            B_inv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return None
        with np.errstate(over="ignore", invalid="ignore"):
            condition = np.abs(B).sum(axis=0).max() * np.abs(B_inv).sum(axis=0).max()
        if not np.isfinite(condition) or condition > max_condition:
            return None
        return B_inv

    def _repair(self, B):
        """
        Swap the basic columns that a pivoted QR finds dependent for the artificial
        columns of the rows left uncovered by the others.

        :return: basis positions that received an artificial column
        """
        _, R, order = scipy.linalg.qr(B, pivoting=True)
        diagonal = np.abs(np.diag(R))
        rank = int((diagonal > TOL_RANK * max(diagonal[0], 1.0)).sum())
        dependent = order[rank:]
        if rank:
            Q = scipy.linalg.qr(B[:, order[:rank]])[0]
        else:
            Q = np.eye(self.m)
        _, _, rows = scipy.linalg.qr(Q[:, rank:].T, pivoting=True)
        logger.warning(
            "Repairing an ill-conditioned basis: %d of %d columns replaced by artificials"
            % (dependent.size, self.m)
        )
        for position in dependent:
            self._make_nonbasic(self.basis[position])
        for position, row in zip(dependent, rows[: dependent.size]):
            column = self.artificial[row]
            self.basis[position] = column
            self.status[column] = _BASIC
            self.upper[column] = np.inf
        self.repaired = True
        return dependent

    def _make_nonbasic(self, j):
        """Move column j onto its nearest finite bound, or leave it free where it is"""
        lower, upper, value = self.lower[j], self.upper[j], self.x[j]
        if np.isfinite(lower) and (
            not np.isfinite(upper) or value - lower <= upper - value
        ):
            self.status[j], self.x[j] = _AT_LOWER, lower
        elif np.isfinite(upper):
            self.status[j], self.x[j] = _AT_UPPER, upper
        else:
            self.status[j] = _FREE

    def _update_basic_values(self):
        nonbasic = self.status != _BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.B_inv @ rhs

    def residual(self):
        """:return: the largest violation of the scaled rows by the current point"""
        return np.abs(self.A @ self.x - self.b).max(initial=0.0)

    def _entering(self, d, bland):
        status = self.status
        movable = self.lower < self.upper
        tol = TOL_DUAL * (1.0 + np.abs(self.cost).max(initial=0.0))
        improving = movable & (
            ((status == _AT_LOWER) & (d < -tol))
            | ((status == _AT_UPPER) & (d > tol))
            | ((status == _FREE) & (np.abs(d) > tol))
        )
        candidates = np.flatnonzero(improving)
        if not candidates.size:
            return None
        if bland:
            return candidates[0]
        return candidates[np.argmax(np.abs(d[candidates]))]

    def _iterate(self, cost, phase):
        """
        Run simplex iterations on the given cost vector. Phase 2 stops early after a
        basis repair.
        :return: True when optimal or repaired, False when an unbounded ray was found
        """
        self.cost = cost
        degenerate = 0
        bland = False
        while True:
            if phase == 2 and self.repaired:
                return True
            y = cost[self.basis] @ self.B_inv
            d = cost - y @ self.A
            d[self.basis] = 0.0
            j = self._entering(d, bland)
            if j is None:
                return True
            if self.iterations >= self.max_iterations:
                raise NumericalFailure(
                    "Simplex did not converge within %d iterations" % self.max_iterations
                )
            self.iterations += 1
            direction = -1.0 if (self.status[j] == _AT_UPPER or d[j] > 0) else 1.0
            alpha = self.B_inv @ self.A[:, j]
            step, leave, leave_status = self._ratio_test(j, alpha, direction, bland)
            if step == np.inf:
                return False
            if step <= TOL_STEP:
                degenerate += 1
                if not bland and degenerate >= self.degenerate_threshold:
                    bland = True
                    logger.warning(
                        "Engaging Bland's rule after %d degenerate pivots (phase %d)"
                        % (degenerate, phase)
                    )
            else:
                degenerate = 0
                bland = False
            self.x[self.basis] -= direction * step * alpha
            self.x[j] += direction * step
            if leave is None:
                # bound flip of the entering column
                self.status[j] = _AT_UPPER if direction > 0 else _AT_LOWER
                self.x[j] = self.upper[j] if direction > 0 else self.lower[j]
                continue
            leaving = self.basis[leave]
            self.status[leaving] = leave_status
            self.x[leaving] = (
                self.lower[leaving] if leave_status == _AT_LOWER else self.upper[leaving]
            )
            self.status[j] = _BASIC
            self.basis[leave] = j
            self._since_refactor += 1
            small_pivot = abs(alpha[leave]) < TOL_PIVOT_REFACTOR * np.abs(alpha).max()
            if small_pivot or self._since_refactor >= self.refactor_interval:
                self.refactor()
                continue
            pivot_row = self.B_inv[leave] / alpha[leave]
            self.B_inv -= np.outer(alpha, pivot_row)
            self.B_inv[leave] = pivot_row
            if self.residual() > TOL_RESIDUAL * (1.0 + np.abs(self.b).max(initial=0.0)):
                logger.debug(
                    "Refactoring after %d updates: basic values drifted off the rows"
                    % self._since_refactor
                )
                self.refactor()

    def _ratio_test(self, j, alpha, direction, bland):
        """
        Two-pass Harris ratio test. The first pass bounds the step while letting every
        basic value pass its bound by TOL_HARRIS; the second takes the largest pivot among
        the rows that block within that step. Entries of alpha below TOL_PIVOT relative to
        the largest one never pivot.

        :return: (step, leaving row or None for a bound flip, nonbasic status of the leaving column)
        """
        basis = self.basis
        x_b = self.x[basis]
        rate = direction * alpha  # basic values move by -rate * step
        lower, upper = self.lower[basis], self.upper[basis]
        tol = TOL_PIVOT * max(1.0, np.abs(alpha).max(initial=0.0))
        dec = (rate > tol) & np.isfinite(lower)
        inc = (rate < -tol) & np.isfinite(upper)
        blocking = dec | inc
        room = np.zeros(self.m)
        room[dec] = x_b[dec] - lower[dec]
        room[inc] = upper[inc] - x_b[inc]
        room = np.maximum(room, 0.0)
        speed = np.abs(rate)
        ratios = np.full(self.m, np.inf)
        ratios[blocking] = room[blocking] / speed[blocking]
        hits = np.where(inc, _AT_UPPER, _AT_LOWER)
        flip = self.upper[j] - self.lower[j]
        step = ratios.min(initial=np.inf)
        if flip <= step:
            return flip, None, None
        if bland:
            ties = np.flatnonzero(ratios <= step + TOL_STEP)
            leave = ties[np.argmin(basis[ties])]
            return ratios[leave], leave, hits[leave]
        relaxed = np.full(self.m, np.inf)
        relaxed[blocking] = (room[blocking] + TOL_HARRIS) / speed[blocking]
        candidates = np.flatnonzero(ratios <= relaxed.min())
        leave = candidates[np.argmax(speed[candidates])]
        if flip <= ratios[leave]:
            return flip, None, None
        return ratios[leave], leave, hits[leave]

    def _phase_one(self):
        """
        Drive the artificials to zero.
        :return: False when the rows cannot be met
        """
        tol = self._row_tolerance
        if self.x[self.artificial].sum() <= tol:
            return True
        phase1_cost = np.zeros(self.n_total)
        phase1_cost[self.artificial] = 1.0
        self._iterate(phase1_cost, phase=1)
        self.refactor()
        infeasibility = self.x[self.artificial].sum()
        if infeasibility > tol:
            logger.debug(
                "Phase 1 ended with infeasibility %.3g after %d iterations"
                % (infeasibility, self.iterations)
            )
            return False
        return True

    def _close_artificials(self):
        basic = self.status[self.artificial] == _BASIC
        self.upper[self.artificial] = 0.0
        self.x[self.artificial] = np.where(basic, self.x[self.artificial], 0.0)
        self.status[self.artificial] = np.where(basic, _BASIC, _AT_LOWER)

    def _check_primal(self):
        tol = 1e2 * self._row_tolerance
        violation = max(
            self.residual(),
            (self.lower - self.x).max(initial=0.0),
            (self.x - self.upper).max(initial=0.0),
        )
        if violation > tol:
            raise NumericalFailure(
                "Terminal basis violates its rows or bounds by %.3g" % violation
            )

    def solve(self):
        n = self.n
        cost = np.concatenate([self.lp.c, np.zeros(self.m_ub + self.m)])
        # a basis repair in phase 2 may break primal feasibility: restart from phase 1
        for _ in range(MAX_RESTARTS + 1):
            if not self._phase_one():
                return LpSolution(LpStatus.INFEASIBLE, *[None] * 6, self.iterations)
            self._close_artificials()
            self.repaired = False
            if not self._iterate(cost, phase=2):
                logger.debug("Unbounded ray found after %d iterations" % self.iterations)
                return LpSolution(LpStatus.UNBOUNDED, *[None] * 6, self.iterations)
            if not self.repaired:
                self.refactor()
            if not self.repaired:
                break
            logger.warning("Restarting phase 1 after a basis repair")
        else:
            raise NumericalFailure("No stable basis after %d basis repairs" % MAX_RESTARTS)
        self._check_primal()

        y = cost[self.basis] @ self.B_inv
        d = cost - y @ self.A
        d[self.basis] = 0.0
        x = self.x[:n].copy()
        # basic structurals are clipped onto their box to remove round-off
        x = np.clip(x, self.lp.lower, self.lp.upper)
        status = self.status[:n]
        lower_duals = np.where(status == _AT_LOWER, d[:n], 0.0)
        upper_duals = np.where(status == _AT_UPPER, -d[:n], 0.0)
        fixed = (self.lower[:n] == self.upper[:n]) & (status != _BASIC)
        lower_duals[fixed] = np.maximum(d[:n][fixed], 0.0)
        upper_duals[fixed] = np.maximum(-d[:n][fixed], 0.0)
        # duals of the scaled rows, back on the rows as given
        y = y / self.row_scale
        logger.debug("LP solved to optimality in %d iterations" % self.iterations)
        return LpSolution(
            status=LpStatus.OPTIMAL,
            x=x,
            objective=float(self.lp.c @ x),
            eq_duals=y[: self.m_eq].copy(),
            ineq_duals=-y[self.m_eq :].copy(),
            lower_duals=lower_duals,
            upper_duals=upper_duals,
            iterations=self.iterations,
        )


def solve_lp(lp):
    """
    Solve a LinearProgram by the two-phase bounded revised simplex method.

    :param lp: LinearProgram
    :return: LpSolution. Infeasible and unbounded instances are reported by status.
    :raises MalformedProblem: inconsistent dimensions
    :raises NumericalFailure: no convergence within the iteration cap
    """
    if not isinstance(lp, LinearProgram):
        raise MalformedProblem("solve_lp expects a LinearProgram")
    lp.validate()
    return _Simplex(lp).solve()


def _most_fractional(x, integer_vars, tol_int):
    frac = x[integer_vars] - np.floor(x[integer_vars])
    distance = np.minimum(frac, 1.0 - frac)
    k = int(np.argmax(distance))
    if distance[k] <= tol_int:
        return None
    return integer_vars[k]


def solve_milp(lp, integer_vars):
    """
    Branch and bound over the LP relaxation.

    Dives depth first into the child on the rounding side of the most fractional
    variable and picks the open node with the best bound when a dive ends.

    :param lp: LinearProgram whose relaxation is solved at every node
    :param integer_vars: indices of the variables that must take integer values
    :return: MilpSolution with the optimal incumbent
    :raises InfeasibleProblem: no integer-feasible point exists
    :raises NodeBudgetExceeded: config["milp.node_budget"] nodes were solved;
        the error carries the best MilpSolution found or None
    """
    integer_vars = np.unique(np.asarray(list(integer_vars), dtype=int))
    if integer_vars.size and (
        integer_vars.min() < 0 or integer_vars.max() >= lp.n_vars
    ):
        raise MalformedProblem("Integer variable index outside the problem")
    tol_int = config["milp.tol_int"]
    budget = config["milp.node_budget"]
    base_lower = lp.lower.copy()
    base_upper = lp.upper.copy()
    base_lower[integer_vars] = np.ceil(base_lower[integer_vars] - tol_int)
    base_upper[integer_vars] = np.floor(base_upper[integer_vars] + tol_int)

    incumbent = None
    relaxation_bound = None
    node_count = 0
    open_nodes = []  # heap of (parent bound, sequence, lower, upper)
    sequence = 0
    dive = (-np.inf, base_lower, base_upper)

    def pruned(bound):
        return incumbent is not None and bound >= incumbent.objective - TOL_GAP * (
            1 + abs(incumbent.objective)
        )

    def result(best_bound):
        return MilpSolution(
            solution=incumbent,
            relaxation_bound=relaxation_bound,
            best_bound=best_bound,
            node_count=node_count,
            gap=incumbent.objective - best_bound,
        )

    while dive is not None or open_nodes:
        if dive is None:
            parent_bound, _, lower, upper = heapq.heappop(open_nodes)
            if pruned(parent_bound):
                continue
        else:
            parent_bound, lower, upper = dive
            dive = None
        if node_count >= budget:
            logger.warning("Branch and bound node budget of %d exhausted" % budget)
            if incumbent is None:
                raise NodeBudgetExceeded(
                    "Node budget of %d exhausted without an integer solution" % budget
                )
            best_bound = min(
                [incumbent.objective, parent_bound] + [node[0] for node in open_nodes]
            )
            raise NodeBudgetExceeded(
                "Node budget of %d exhausted with gap %.6g"
                % (budget, incumbent.objective - best_bound),
                solution=result(best_bound),
            )
        if (lower > upper).any():
            continue
        node_count += 1
        relaxed = solve_lp(lp.with_bounds(lower, upper))
        if relaxed.status is LpStatus.UNBOUNDED:
            raise SolverError(
                "The LP relaxation of the mixed-integer problem is unbounded"
            )
        if relaxed.status is LpStatus.INFEASIBLE:
            continue
        bound = relaxed.objective
        if relaxation_bound is None:
            relaxation_bound = bound
        if pruned(bound):
            continue
        j = _most_fractional(relaxed.x, integer_vars, tol_int)
        if j is None:
            incumbent = relaxed
            logger.debug(
                "New incumbent %.6g at node %d" % (incumbent.objective, node_count)
            )
            continue
        value = relaxed.x[j]
        down_upper, up_lower = upper.copy(), lower.copy()
        down_upper[j] = math.floor(value)
        up_lower[j] = math.ceil(value)
        down, up = (lower, down_upper), (up_lower, upper)
        near, far = (down, up) if value - math.floor(value) < 0.5 else (up, down)
        heapq.heappush(open_nodes, (bound, sequence, *far))
        sequence += 1
        dive = (bound, *near)

    if incumbent is None:
        raise InfeasibleProblem("No integer-feasible point after %d nodes" % node_count)
    logger.debug(
        "Branch and bound finished: objective %.6g, %d nodes"
        % (incumbent.objective, node_count)
    )
    return result(incumbent.objective)


def format_lp(lp):
    """
    Plain-text dump of an LP: objective row, equality rows, inequality rows, then bounds.
    Not a stable interchange format.
    """
    names = lp.names or ["v%d" % j for j in range(lp.n_vars)]

    def row(coefficients):
        return " ".join(
            "%+.12g %s" % (a, name) for a, name in zip(coefficients, names) if a != 0
        ) or "0"

    lines = ["minimize", "  obj: " + row(lp.c), "subject to"]
    lines += [
        "  eq%d: %s = %.12g" % (i, row(a), b) for i, (a, b) in enumerate(zip(lp.A_eq, lp.b_eq))
    ]
    lines += [
        "  ub%d: %s <= %.12g" % (i, row(a), b) for i, (a, b) in enumerate(zip(lp.A_ub, lp.b_ub))
    ]
    lines.append("bounds")
    lines += [
        "  %.12g <= %s <= %.12g" % (lo, name, hi)
        for name, lo, hi in zip(names, lp.lower, lp.upper)
    ]
    lines.append("end")
    return "\n".join(lines) + "\n"


def dump_lp(lp, path):
    """
    Write format_lp(lp) to a file for bug reports.
    """
    safe_write_text(Path(path), format_lp(lp))
    logger.info("Wrote LP dump to %s" % path)
