"""Kinematic-level formation controller.

The control objective is encoded in a stacked error vector: the leader's
tracking error rotated into its body frame, followed by one coordination
error per tree edge. Along trajectories that stacked error obeys a linear
relation in the robots' twists through a tall block-sparse coupling
matrix plus a feedforward term built from the desired trajectories. The
commanded twists minimize the residual energy of driving that relation to
the gain-weighted error, an overdetermined least-squares problem solved
through the normal equations.

``fictitious_velocity`` additionally returns the exact time derivative of
the commanded twist along the closed-loop flow, which the torque-level
backstepping controller consumes. The derivative accounts for the motion
of the leader's body frame (the skew term in the stacked-error rate), not
just the directly coupled part; without it the computed rate would be
wrong whenever the leader still carries tracking error.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import COND_LIMIT, RankDeficient, least_squares_solve
from .se2 import SELECT, SKEW, rotation_matrix, steering_matrix

__all__ = [
    "ErrorState",
    "error_state",
    "coupling_matrix",
    "coupling_rate",
    "feedforward_term",
    "feedforward_rate",
    "kinematic_control",
    "FictitiousVelocity",
    "fictitious_velocity",
]


@dataclass(frozen=True)
class ErrorState:
    """Stacked 3n error vector with per-edge addressing."""

    vector: np.ndarray
    tree: object

    @property
    def leader_body_error(self):
        return self.vector[:3]

    def edge_error(self, k):
        return self.vector[3 * (k + 1): 3 * (k + 2)]

    @property
    def norm(self):
        return float(np.linalg.norm(self.vector))


def _error_vector(tree, poses, desired_poses):
    e = np.asarray(desired_poses, dtype=float) - np.asarray(poses, dtype=float)
    z = np.empty(3 * tree.n)
    z[:3] = rotation_matrix(poses[0][2]).T @ e[0]
    for k, (i, j) in enumerate(tree.edges):
        z[3 * (k + 1): 3 * (k + 2)] = e[i - 1] - e[j - 1]
    return z


def error_state(tree, poses, desired_poses):
    """Stack the leader's body-frame tracking error and all coordination
    errors (parent minus child, in tree edge order)."""
    return ErrorState(vector=_error_vector(tree, poses, desired_poses),
                      tree=tree)


def coupling_matrix(tree, headings):
    """Tall (3n, 2n) matrix relating robot twists to the stacked-error
    rate: leader row block is minus the twist selector, each edge block
    carries minus the parent's steering matrix and plus the child's."""
    th = np.asarray(headings, dtype=float)
    n = tree.n
    A = np.zeros((3 * n, 2 * n))
    A[:3, :2] = -SELECT
    for k, (i, j) in enumerate(tree.edges):
        r = 3 * (k + 1)
        A[r:r + 3, 2 * (i - 1): 2 * i] = -steering_matrix(th[i - 1])
        A[r:r + 3, 2 * (j - 1): 2 * j] = steering_matrix(th[j - 1])
    return A


def coupling_rate(tree, headings, omegas):
    """Time derivative of the coupling matrix given actual angular speeds.

    The leader block is constant so its rate is zero; edge blocks rotate
    with their endpoints' headings.
    """
    th = np.asarray(headings, dtype=float)
    w = np.asarray(omegas, dtype=float)
    n = tree.n
    Adot = np.zeros((3 * n, 2 * n))
    for k, (i, j) in enumerate(tree.edges):
        r = 3 * (k + 1)
        ci, si = np.cos(th[i - 1]), np.sin(th[i - 1])
        cj, sj = np.cos(th[j - 1]), np.sin(th[j - 1])
        Adot[r, 2 * (i - 1)] = w[i - 1] * si
        Adot[r + 1, 2 * (i - 1)] = -w[i - 1] * ci
        Adot[r, 2 * (j - 1)] = -w[j - 1] * sj
        Adot[r + 1, 2 * (j - 1)] = w[j - 1] * cj
    return Adot


def _desired_pose_rates(thetad, etad):
    """Desired configuration rates, one (3,) row per robot."""
    thetad = np.asarray(thetad, dtype=float)
    etad = np.asarray(etad, dtype=float)
    g = np.empty((len(thetad), 3))
    g[:, 0] = etad[:, 0] * np.cos(thetad)
    g[:, 1] = etad[:, 0] * np.sin(thetad)
    g[:, 2] = etad[:, 1]
    return g


def feedforward_term(tree, theta1, thetad, etad):
    """Desired-motion feedforward stacked alongside the coupling matrix:
    the leader's desired rate rotated into its body frame, then the
    difference of desired rates across each edge."""
    g = _desired_pose_rates(thetad, etad)
    ff = np.empty(3 * tree.n)
    ff[:3] = rotation_matrix(theta1).T @ g[0]
    for k, (i, j) in enumerate(tree.edges):
        ff[3 * (k + 1): 3 * (k + 2)] = g[i - 1] - g[j - 1]
    return ff


def feedforward_rate(tree, theta1, omega1, thetad, etad, etadd):
    """Exact time derivative of the feedforward term.

    The leader block depends on the robot's actual heading, so its rate
    uses the actual angular speed; edge blocks move with the desired
    trajectories only.
    """
    thetad = np.asarray(thetad, dtype=float)
    etad = np.asarray(etad, dtype=float)
    etadd = np.asarray(etadd, dtype=float)
    g = _desired_pose_rates(thetad, etad)
    gdot = np.empty_like(g)
    # d/dt of each desired rate: spin by the desired omega plus the
    # steering of the desired twist rate.
    gdot[:, 0] = -etad[:, 1] * g[:, 1] + etadd[:, 0] * np.cos(thetad)
    gdot[:, 1] = etad[:, 1] * g[:, 0] + etadd[:, 0] * np.sin(thetad)
    gdot[:, 2] = etadd[:, 1]
    Rt = rotation_matrix(theta1).T
    ffdot = np.empty(3 * tree.n)
    ffdot[:3] = omega1 * (SKEW @ (Rt @ g[0])) + Rt @ gdot[0]
    for k, (i, j) in enumerate(tree.edges):
        ffdot[3 * (k + 1): 3 * (k + 2)] = gdot[i - 1] - gdot[j - 1]
    return ffdot


def kinematic_control(z, A, ff, gain):
    """Commanded twists minimizing ||A eta + gain*z + ff||.

    ``gain`` is the diagonal (3n,) formation gain. Raises RankDeficient
    when the coupling matrix loses effective column rank.
    """
    z = np.asarray(z, dtype=float)
    gain = np.asarray(gain, dtype=float)
    return least_squares_solve(A, -(gain * z) - ff).solution


@dataclass(frozen=True)
class FictitiousVelocity:
    """Least-squares twist command and its exact time derivative."""

    twist: np.ndarray
    rate: np.ndarray


def fictitious_velocity(tree, poses, twists, qd, etad, etadd, gain):
    """Evaluate the twist command and its derivative along the flow.

    ``twists`` are the robots' actual twists, which enter through the
    stacked-error rate and the coupling-matrix rate. Raises RankDeficient
    behind the same conditioning guard as the solver.
    """
    poses = np.asarray(poses, dtype=float)
    twists = np.asarray(twists, dtype=float)
    qd = np.asarray(qd, dtype=float)
    gain = np.asarray(gain, dtype=float)
    th = poses[:, 2]
    omega = twists[:, 1]

    z = _error_vector(tree, poses, qd)
    A = coupling_matrix(tree, th)
    ff = feedforward_term(tree, th[0], qd[:, 2], etad)

    G = A.T @ A
    condition = float(np.linalg.cond(G))
    if not np.isfinite(condition) or condition > COND_LIMIT:
        raise RankDeficient(f"cond = {condition:.3e}")
    w = gain * z + ff
    etaf = -np.linalg.solve(G, A.T @ w)

    Adot = coupling_rate(tree, th, omega)
    Gdot = Adot.T @ A + A.T @ Adot
    eta = twists.reshape(-1)
    zdot = A @ eta + ff
    # Leader body frame rotates with the robot: the stacked-error rate
    # picks up omega_1 times the skew of the leader block.
    zdot[0] += omega[0] * z[1]
    zdot[1] -= omega[0] * z[0]
    ffdot = feedforward_rate(tree, th[0], omega[0], qd[:, 2], etad, etadd)
    wdot = gain * zdot + ffdot
    etafdot = -np.linalg.solve(G, Gdot @ etaf + Adot.T @ w + A.T @ wdot)
    return FictitiousVelocity(twist=etaf, rate=etafdot)
