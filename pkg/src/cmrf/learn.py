"""Learning a continuous pairwise MRF from data, in closed form.

The estimator works entirely through basis-expansion coefficients of the
single-node and edge marginals (beliefs): sample averages of the basis
functions give the expansion coefficients directly, and the fitted
energy is assembled from logarithms of the resulting truncated beliefs.
A floor ``max(eps, .)`` keeps those logarithms finite where truncation
drives a belief negative.

Pipeline: :func:`compute_moments` -> :func:`fit` -> ``LearnedModel``
(evaluable energy/density) -> optionally :func:`recover_coefficients`
for the explicit node/edge expansion coefficients of the energy.
"""

import math

import numpy as np

from .basis import (
    BasisSystem,
    cutoff_quadrature_1d,
    cutoff_quadrature_2d,
    make_basis,
    make_quadrature,
    DEFAULT_ORDER_1D,
    DEFAULT_ORDER_2D,
)
from .core import Graph, build_chain, build_grid
from .sample import PairwiseEnergyModel


class MomentSet:
    """Per-node and per-edge sample moments of the basis functions, orders 1..K.

    ``node_moments[i, s-1]`` is the average of ``phi_s`` over the samples
    of node ``i``; ``edge_moments[(u, v)][s-1, t-1]`` the average of
    ``phi_s(x_u) * phi_t(x_v)``.  Row index of an edge matrix always
    belongs to the smaller node label.
    """

    def __init__(self, graph, basis, K, node_moments, edge_moments):
        node_moments = np.asarray(node_moments, dtype=float)
        if node_moments.shape != (graph.n, K):
            raise ValueError(
                f"node moments shape {node_moments.shape}, expected {(graph.n, K)}"
            )
        edges = set(graph.edges)
        if set(edge_moments) != edges:
            raise ValueError("edge moments must cover exactly the graph edges")
        clean = {}
        for e, mat in edge_moments.items():
            mat = np.asarray(mat, dtype=float)
            if mat.shape != (K, K):
                raise ValueError(f"edge {e} moment shape {mat.shape}, expected {(K, K)}")
            clean[e] = mat
        self.graph = graph
        self.basis = basis
        self.K = int(K)
        self.node_moments = node_moments
        self.edge_moments = clean

    @property
    def chi(self):
        return self.basis.chi

    @property
    def interval(self):
        return self.basis.interval

    def _phi(self, x):
        """Basis values of orders 1..K, shape ``x.shape + (K,)``."""
        return self.basis.eval_orders(np.asarray(x, dtype=float), self.K)[..., 1:]

    def node_belief(self, i, x):
        """Truncated single-node belief; normalized but possibly negative."""
        return 1.0 / self.chi + self._phi(x) @ self.node_moments[i]

    def _edge_matrix(self, i, j):
        key = (min(i, j), max(i, j))
        if key not in self.edge_moments:
            raise ValueError(f"({i}, {j}) is not an edge")
        mat = self.edge_moments[key]
        return mat if i < j else mat.T

    def edge_belief(self, i, j, xi, xj):
        """Truncated pairwise belief at broadcastable points ``(xi, xj)``."""
        mat = self._edge_matrix(i, j)
        xi, xj = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(xj, dtype=float))
        pi = self._phi(xi)
        pj = self._phi(xj)
        chi = self.chi
        cross = np.einsum("...s,st,...t->...", pi, mat, pj)
        out = (
            1.0 / chi**2
            + (pi @ self.node_moments[i] + pj @ self.node_moments[j]) / chi
            + cross
        )
        return out if out.shape else float(out)

    def edge_belief_grid(self, i, j, xi, xj):
        """Pairwise belief on the product grid ``xi x xj`` (matrix output)."""
        mat = self._edge_matrix(i, j)
        pi = self._phi(np.asarray(xi, dtype=float))
        pj = self._phi(np.asarray(xj, dtype=float))
        chi = self.chi
        return (
            1.0 / chi**2
            + ((pi @ self.node_moments[i])[:, None] + (pj @ self.node_moments[j])[None, :]) / chi
            + pi @ mat @ pj.T
        )


def compute_moments(data, graph, basis, K):
    """Sample-average the basis functions over the dataset, orders 1..K."""
    if K < 1:
        raise ValueError("truncation order K must be >= 1")
    if K > basis.max_order:
        raise ValueError(f"K={K} exceeds basis max_order={basis.max_order}")
    if data.n != graph.n:
        raise ValueError(f"dataset has {data.n} variables, graph has {graph.n}")
    if data.interval != basis.interval:
        raise ValueError(
            f"dataset interval {data.interval} differs from basis interval {basis.interval}"
        )
    phi = basis.eval_orders(data.values, K)[..., 1:]  # (N, n, K)
    node_moments = phi.mean(axis=0)
    N = data.N
    edge_moments = {
        (u, v): phi[:, u, :].T @ phi[:, v, :] / N for (u, v) in graph.edges
    }
    return MomentSet(graph, basis, K, node_moments, edge_moments)


def _empty_moments(graph, basis):
    """Order-0 moment set: every belief is the uniform density."""
    return MomentSet(
        graph, basis, 0,
        np.zeros((graph.n, 0)),
        {e: np.zeros((0, 0)) for e in graph.edges},
    )


class LearnedModel(PairwiseEnergyModel):
    """Fitted model: moments, positivity floor ``epsilon``, and normalizers.

    The energy is assembled from ``ln max(epsilon, belief)`` terms; the
    normalizers turn the floored beliefs back into proper densities
    (``node_density`` / ``edge_density``) and are computed with
    quadrature rules split at the floor crossings.
    """

    def __init__(self, moments, epsilon):
        if epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")
        self.moments = moments
        self.epsilon = float(epsilon)
        self.graph = moments.graph
        self.basis = moments.basis
        self.interval = moments.interval
        self.K = moments.K

        eps = self.epsilon
        self._node_rules = []
        self.node_normalizers = np.empty(self.graph.n)
        for i in range(self.graph.n):
            rule = cutoff_quadrature_1d(
                lambda x, i=i: moments.node_belief(i, x) - eps, self.interval
            )
            self._node_rules.append(rule)
            self.node_normalizers[i] = rule.apply(
                np.maximum(eps, moments.node_belief(i, rule.nodes))
            )

        self._edge_rules = {}
        self.edge_normalizers = {}
        for (u, v) in self.graph.edges:
            grid = cutoff_quadrature_2d(
                lambda x, y, u=u, v=v: moments.edge_belief(u, v, x, y) - eps,
                self.interval,
            )
            self._edge_rules[(u, v)] = grid
            px, py, w = grid
            vals = np.maximum(eps, moments.edge_belief(u, v, px, py))
            self.edge_normalizers[(u, v)] = float(w @ vals)

    # -- density / energy surface ------------------------------------

    def node_density(self, i, x):
        """Floored, renormalized node belief (a proper density)."""
        b = np.maximum(self.epsilon, self.moments.node_belief(i, x))
        return b / self.node_normalizers[i]

    def edge_density(self, i, j, xi, xj):
        """Floored, renormalized pairwise belief at pointwise arguments."""
        key = (min(i, j), max(i, j))
        b = np.maximum(self.epsilon, self.moments.edge_belief(i, j, xi, xj))
        return b / self.edge_normalizers[key]

    def node_term(self, i, x):
        b = np.maximum(self.epsilon, self.moments.node_belief(i, x))
        return (1 - self.graph.degree(i)) * np.log(b)

    def edge_term(self, u, v, xu, xv):
        b = np.maximum(self.epsilon, self.moments.edge_belief(u, v, xu, xv))
        return np.log(b)

    def unnorm_density(self, x):
        """``exp(-energy)``; positive, unnormalized."""
        return np.exp(-self.energy(x))


def fit(data, graph, basis, K, epsilon):
    """Estimate moments from ``data`` and assemble the learned model.

    ``K = 0`` is the uniform model on the box (no moments estimated).
    """
    if K == 0:
        return LearnedModel(_empty_moments(graph, basis), epsilon)
    return LearnedModel(compute_moments(data, graph, basis, K), epsilon)


class CoefficientSet:
    """Basis-expansion coefficients of the fitted energy and log-beliefs.

    ``log_belief_node[i, s-1]`` expands ``ln`` of the node density;
    ``log_belief_edge[(u, v)]`` is ``(K+1) x (K+1)`` including the
    order-0 row/column; ``node_energy`` and ``edge_energy`` are the
    resulting energy coefficients (edge matrices stored once, row index
    on the smaller node label).
    """

    def __init__(self, graph, basis, K, log_belief_node, log_belief_edge,
                 node_energy, edge_energy):
        self.graph = graph
        self.basis = basis
        self.K = int(K)
        self.log_belief_node = log_belief_node
        self.log_belief_edge = log_belief_edge
        self.node_energy = node_energy
        self.edge_energy = edge_energy

    def edge_energy_oriented(self, i, j):
        """Edge energy matrix with the row index on node ``i``."""
        key = (min(i, j), max(i, j))
        mat = self.edge_energy[key]
        return mat if i < j else mat.T


def recover_coefficients(model):
    """Project the log-densities of ``model`` onto the basis.

    Returns the node/edge expansion coefficients of the fitted energy:
    node coefficients combine the node log-belief with the order-0
    column of each incident edge's log-belief expansion; edge energy
    coefficients are the order >= 1 block of the edge expansion.
    """
    m = model.moments
    K = m.K
    graph = model.graph
    basis = m.basis
    sqrt_chi = math.sqrt(m.chi)

    A = np.zeros((graph.n, K))
    for i in range(graph.n):
        rule = model._node_rules[i]
        logb = np.log(model.node_density(i, rule.nodes))
        phi = basis.eval_orders(rule.nodes, K)[:, 1:]
        A[i] = phi.T @ (rule.weights * logb)

    B = {}
    for (u, v) in graph.edges:
        px, py, w = model._edge_rules[(u, v)]
        logxi = np.log(model.edge_density(u, v, px, py))
        pu = basis.eval_orders(px, K)
        pv = basis.eval_orders(py, K)
        B[(u, v)] = (pu * (w * logxi)[:, None]).T @ pv

    H = np.zeros((graph.n, K))
    for i in range(graph.n):
        H[i] = (1 - graph.degree(i)) * A[i]
        for j in graph.neighbors[i]:
            mat = B[(i, j)] if i < j else B[(j, i)].T
            H[i] += mat[1:, 0] / sqrt_chi
    J = {e: B[e][1:, 1:] for e in graph.edges}
    return CoefficientSet(graph, basis, K, A, B, H, J)


def energy_from_coefficients(coeffs, x):
    """Energy of points under the explicit coefficient form (no constant term)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    K = coeffs.K
    basis = coeffs.basis
    phi = basis.eval_orders(pts, K)[..., 1:]  # (M, n, K)
    total = np.zeros(pts.shape[0])
    for i in range(coeffs.graph.n):
        total -= phi[:, i, :] @ coeffs.node_energy[i]
    for (u, v) in coeffs.graph.edges:
        total -= np.einsum("ms,st,mt->m", phi[:, u, :], coeffs.edge_energy[(u, v)], phi[:, v, :])
    return float(total[0]) if single else total


def bethe_free_energy(moments, coeffs, epsilon=0.0):
    """Bethe variational objective at the given moments and energy coefficients.

    With ``epsilon > 0`` the logarithms use the floored, renormalized
    beliefs; the linear part and the densities in front of the logs stay
    the raw truncated beliefs, so the objective remains a smooth
    function of the moments wherever the floor is inactive.
    """
    graph = moments.graph
    K = moments.K
    if coeffs.K != K:
        raise ValueError(f"coefficient order {coeffs.K} != moment order {K}")

    linear = 0.0
    for i in range(graph.n):
        linear -= coeffs.node_energy[i] @ moments.node_moments[i]
    for e in graph.edges:
        linear -= float(np.sum(coeffs.edge_energy[e] * moments.edge_moments[e]))

    interval = moments.interval
    entropy = 0.0
    for i in range(graph.n):
        if epsilon > 0.0:
            rule = cutoff_quadrature_1d(
                lambda x: moments.node_belief(i, x) - epsilon, interval
            )
        else:
            rule = make_quadrature(interval, DEFAULT_ORDER_1D)
        b = moments.node_belief(i, rule.nodes)
        floored = np.maximum(epsilon, b) if epsilon > 0.0 else b
        norm = rule.apply(floored) if epsilon > 0.0 else 1.0
        entropy += (1 - graph.degree(i)) * rule.apply(b * (np.log(floored) - math.log(norm)))

    for (u, v) in graph.edges:
        if epsilon > 0.0:
            px, py, w = cutoff_quadrature_2d(
                lambda x, y: moments.edge_belief(u, v, x, y) - epsilon, interval
            )
            b = moments.edge_belief(u, v, px, py)
            floored = np.maximum(epsilon, b)
            norm = float(w @ floored)
            entropy += float(w @ (b * (np.log(floored) - math.log(norm))))
        else:
            rule = make_quadrature(interval, DEFAULT_ORDER_2D)
            b = moments.edge_belief_grid(u, v, rule.nodes, rule.nodes)
            entropy += float(rule.weights @ (b * np.log(b)) @ rule.weights)

    return linear + entropy


# -- model file format ---------------------------------------------------


def save_model(model, path):
    """Write the model as plain text: settings, graph, then every moment."""
    m = model.moments
    g = model.graph
    lines = ["cmrf-model 1"]
    lines.append(f"basis {m.basis.kind}")
    lines.append(f"max_order {m.basis.max_order}")
    lines.append(f"interval {m.interval[0]!r} {m.interval[1]!r}")
    lines.append(f"epsilon {model.epsilon!r}")
    lines.append(f"K {m.K}")
    if g.shape is not None:
        lines.append("graph " + " ".join(str(p) for p in g.shape))
    else:
        lines.append(f"graph general {g.n}")
        for (u, v) in g.edges:
            lines.append(f"edge {u} {v}")
    for i in range(g.n):
        for s in range(1, m.K + 1):
            lines.append(f"node {i} {s} {m.node_moments[i, s - 1]!r}")
    for (u, v) in g.edges:
        mat = m.edge_moments[(u, v)]
        for s in range(1, m.K + 1):
            for t in range(1, m.K + 1):
                lines.append(f"pair {u} {v} {s} {t} {mat[s - 1, t - 1]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    """Rebuild a :class:`LearnedModel` from :func:`save_model` output."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "cmrf-model 1":
        raise ValueError(f"{path}: not a cmrf model file")

    header = {}
    edges = []
    node_entries = []
    pair_entries = []
    for ln in lines[1:]:
        fields = ln.split()
        tag = fields[0]
        if tag == "node":
            node_entries.append((int(fields[1]), int(fields[2]), float(fields[3])))
        elif tag == "pair":
            pair_entries.append(
                (int(fields[1]), int(fields[2]), int(fields[3]), int(fields[4]), float(fields[5]))
            )
        elif tag == "edge":
            edges.append((int(fields[1]), int(fields[2])))
        else:
            header[tag] = fields[1:]

    kind = header["basis"][0]
    max_order = int(header["max_order"][0])
    interval = (float(header["interval"][0]), float(header["interval"][1]))
    epsilon = float(header["epsilon"][0])
    K = int(header["K"][0])

    gspec = header["graph"]
    if gspec[0] == "chain":
        graph = build_chain(int(gspec[1]))
    elif gspec[0] == "grid":
        graph = build_grid(int(gspec[1]), int(gspec[2]))
    elif gspec[0] == "general":
        graph = Graph(int(gspec[1]), edges)
    else:
        raise ValueError(f"{path}: unknown graph spec {gspec!r}")

    basis = make_basis(kind, interval, max_order)
    node_moments = np.zeros((graph.n, K))
    for (i, s, val) in node_entries:
        node_moments[i, s - 1] = val
    edge_moments = {e: np.zeros((K, K)) for e in graph.edges}
    for (u, v, s, t, val) in pair_entries:
        edge_moments[(u, v)][s - 1, t - 1] = val
    moments = MomentSet(graph, basis, K, node_moments, edge_moments)
    return LearnedModel(moments, epsilon)
