"""Grid-discretized belief propagation and an exact chain oracle.

These are validators: a pairwise model's interval is discretized into
``G`` equal cells and the node/edge local terms tabulated at the cell
centers, after which message passing (or, on chains, exact transfer
products) computes marginals of the discretized distribution.
Integrals become midpoint sums with the cell width as measure, so every
message, belief, and the chain log-partition is a proper density /
integral on the grid.
"""

import math

import numpy as np


class DiscretizedField:
    """Local factors of a pairwise model tabulated at ``G`` cell centers."""

    def __init__(self, graph, interval, grid, node_factors, edge_factors):
        self.graph = graph
        self.interval = interval
        self.grid = grid
        self.delta = grid[1] - grid[0] if len(grid) > 1 else interval[1] - interval[0]
        self.node_factors = node_factors        # (n, G), exp of node terms
        self.edge_factors = edge_factors        # {(u,v): (G,G)}, exp of edge terms

    @property
    def G(self):
        return len(self.grid)


def discretize(model, G):
    """Tabulate ``exp(node_term)`` and ``exp(edge_term)`` on a midpoint grid."""
    if G < 8:
        raise ValueError("grid size must be >= 8")
    low, high = model.interval
    delta = (high - low) / G
    grid = low + (np.arange(G) + 0.5) * delta
    node_factors = np.empty((model.graph.n, G))
    for i in range(model.graph.n):
        node_factors[i] = np.exp(model.node_term(i, grid))
    edge_factors = {}
    for (u, v) in model.graph.edges:
        edge_factors[(u, v)] = np.exp(model.edge_term(u, v, grid[:, None], grid[None, :]))
    for i in range(model.graph.n):
        if not np.all(np.isfinite(node_factors[i])):
            raise ValueError(f"non-finite node factor at node {i}")
    for e, mat in edge_factors.items():
        if not np.all(np.isfinite(mat)):
            raise ValueError(f"non-finite edge factor on edge {e}")
    return DiscretizedField(model.graph, model.interval, grid, node_factors, edge_factors)


class LbpState:
    """Directed messages plus convergence bookkeeping."""

    def __init__(self, messages, residual, iterations, converged):
        self.messages = messages      # {(i, j): (G,) density on x_j}
        self.residual = residual
        self.iterations = iterations
        self.converged = converged


def _cavity(field, messages, i, exclude):
    """Unnormalized product of the node factor and incoming messages except one."""
    pi = field.node_factors[i].copy()
    for k in field.graph.neighbors[i]:
        if k != exclude:
            pi *= messages[(k, i)]
    return pi


def lbp_solve(field, damping=0.5, tol=1e-10, max_iter=10_000):
    """Synchronous message passing on the discretized field.

    Messages start uniform and stay normalized (midpoint integral 1)
    throughout.  Returns an :class:`LbpState` whose ``converged`` flag
    reports whether the last applied update fell below ``tol``;
    non-convergence is reported, not raised.
    """
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    delta = field.delta
    uniform = np.full(field.G, 1.0 / (field.interval[1] - field.interval[0]))
    messages = {}
    for (u, v) in field.graph.edges:
        messages[(u, v)] = uniform.copy()
        messages[(v, u)] = uniform.copy()

    residual = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_messages = {}
        residual = 0.0
        for (u, v) in field.graph.edges:
            w = field.edge_factors[(u, v)]
            for (i, j), mat in (((u, v), w), ((v, u), w.T)):
                pi = _cavity(field, messages, i, j)
                pi /= pi.sum() * delta
                raw = (pi * delta) @ mat
                raw /= raw.sum() * delta
                nxt = (1.0 - damping) * raw + damping * messages[(i, j)]
                residual = max(residual, float(np.max(np.abs(nxt - messages[(i, j)]))))
                new_messages[(i, j)] = nxt
        messages = new_messages
        if residual < tol:
            break
    return LbpState(messages, residual, iterations, residual < tol)


def lbp_beliefs(field, state):
    """Node and edge marginals implied by the current messages.

    Returns ``(node_beliefs, edge_beliefs)``: an ``(n, G)`` array of
    densities and a dict of ``(G, G)`` densities per edge, each
    normalized under the midpoint measure.
    """
    delta = field.delta
    node_beliefs = np.empty((field.graph.n, field.G))
    for i in range(field.graph.n):
        b = _cavity(field, state.messages, i, exclude=None)
        node_beliefs[i] = b / (b.sum() * delta)
    edge_beliefs = {}
    for (u, v) in field.graph.edges:
        pu = _cavity(field, state.messages, u, v)
        pv = _cavity(field, state.messages, v, u)
        xi = field.edge_factors[(u, v)] * np.outer(pu, pv)
        edge_beliefs[(u, v)] = xi / (xi.sum() * delta * delta)
    return node_beliefs, edge_beliefs


def chain_marginals_exact(field):
    """Exact node marginals and log-partition of a discretized chain.

    Transfer-matrix elimination in scaled arithmetic (log-domain
    accumulation of the scale factors), so long chains cannot overflow.
    """
    n = field.graph.n
    chain_edges = tuple((i, i + 1) for i in range(n - 1))
    if field.graph.edges != chain_edges:
        raise ValueError("field is not defined on a chain graph")
    delta = field.delta
    f = field.node_factors
    w = field.edge_factors

    forward = [None] * n
    log_scale = 0.0
    a = f[0].copy()
    scale = a.max()
    a /= scale
    log_scale += math.log(scale)
    forward[0] = a
    for k in range(1, n):
        a = (forward[k - 1] * delta) @ w[(k - 1, k)] * f[k]
        scale = a.max()
        a /= scale
        log_scale += math.log(scale)
        forward[k] = a
    log_partition = log_scale + math.log(float(forward[n - 1].sum() * delta))

    backward = [None] * n
    b = np.ones(field.G)
    backward[n - 1] = b
    for k in range(n - 2, -1, -1):
        b = w[(k, k + 1)] @ (f[k + 1] * backward[k + 1] * delta)
        b /= b.max()
        backward[k] = b

    marginals = np.empty((n, field.G))
    for k in range(n):
        m = forward[k] * backward[k]
        marginals[k] = m / (m.sum() * delta)
    return marginals, log_partition
