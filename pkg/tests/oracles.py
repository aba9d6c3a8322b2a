"""Independent reference implementations used to cross-check the engine.

Everything here is deliberately naive: breadth-first searches, full
recomputation after every step, winding-parity double covers.  None of it
shares code with the union-find / dual-crossing paths it validates.
"""

from collections import defaultdict


def adjacency_lists(domain, open_mask=None):
    adj = defaultdict(list)
    for eid in range(domain.n_edges):
        if open_mask is None or open_mask[eid]:
            u, v = int(domain.edge_u[eid]), int(domain.edge_v[eid])
            adj[u].append(v)
            adj[v].append(u)
    return adj


def bfs_component(adj, start):
    seen = {start}
    queue = [start]
    while queue:
        a = queue.pop()
        for w in adj[a]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def bfs_partition(domain, open_mask):
    """Map vertex id -> component label (the smallest id in its component)."""
    adj = adjacency_lists(domain, open_mask)
    label = {}
    for v in range(domain.n_vertices):
        if v not in label:
            comp = bfs_component(adj, v)
            lab = min(comp)
            for w in comp:
                label[w] = lab
    return label


def frozen_oracle(domain, order, threshold):
    """Replay the frozen dynamics recomputing clusters from scratch each step.

    Returns (set of open edge ids, vertex->label partition of the final open
    graph, label->volume).
    """
    adj = defaultdict(set)

    def comp(v):
        seen = {v}
        queue = [v]
        while queue:
            a = queue.pop()
            for w in adj[a]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    open_ids = set()
    for eid in order:
        u, v = int(domain.edge_u[eid]), int(domain.edge_v[eid])
        if len(comp(u)) < threshold and len(comp(v)) < threshold:
            open_ids.add(int(eid))
            adj[u].add(v)
            adj[v].add(u)
    label = {}
    volume = {}
    for v in range(domain.n_vertices):
        if v not in label:
            c = comp(v)
            lab = min(c)
            volume[lab] = len(c)
            for w in c:
                label[w] = lab
    return open_ids, label, volume


def crossing_oracle(domain, open_mask, bounds, orientation="H"):
    x1, x2, y1, y2 = bounds
    inside = {}
    for vid in range(domain.n_vertices):
        x, y = domain.vertex(vid)
        inside[vid] = x1 <= x <= x2 and y1 <= y <= y2
    adj = defaultdict(list)
    for eid in range(domain.n_edges):
        u, v = int(domain.edge_u[eid]), int(domain.edge_v[eid])
        if open_mask[eid] and inside[u] and inside[v]:
            adj[u].append(v)
            adj[v].append(u)
    if orientation == "H":
        src = [v for v in range(domain.n_vertices) if inside[v] and domain.vertex(v)[0] == x1]
        dst = {v for v in range(domain.n_vertices) if inside[v] and domain.vertex(v)[0] == x2}
    else:
        src = [v for v in range(domain.n_vertices) if inside[v] and domain.vertex(v)[1] == y1]
        dst = {v for v in range(domain.n_vertices) if inside[v] and domain.vertex(v)[1] == y2}
    seen = set(src)
    queue = list(src)
    while queue:
        a = queue.pop()
        if a in dst:
            return True
        for w in adj[a]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return bool(seen & dst)


class _DSU:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        p = self.parent.setdefault(x, x)
        if p != x:
            self.parent[x] = self.find(p)
        return self.parent[x]

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def winding_circuit_oracle(domain, open_mask, n1, n2):
    """Open circuit in A(n1, n2) surrounding the origin, by winding parity.

    A cycle surrounds the origin iff it crosses the ray {(t, 1/2): t >= 1/4}
    an odd number of times; on the double cover that folds this parity, a
    surrounding cycle exists iff some vertex connects to its own mirror.
    Only edges with both endpoints at max-norm in (n1, n2] participate.
    """
    def in_annulus(vid):
        x, y = domain.vertex(vid)
        return n1 < max(abs(x), abs(y)) <= n2

    dsu = _DSU()
    members = set()
    for eid in range(domain.n_edges):
        if not open_mask[eid]:
            continue
        u, v = int(domain.edge_u[eid]), int(domain.edge_v[eid])
        if not (in_annulus(u) and in_annulus(v)):
            continue
        members.update((u, v))
        (ux, uy), (vx, vy) = domain.vertex(u), domain.vertex(v)
        crosses = (ux == vx) and (min(uy, vy) == 0) and (max(uy, vy) == 1) and ux >= 1
        if crosses:
            dsu.union((u, 0), (v, 1))
            dsu.union((u, 1), (v, 0))
        else:
            dsu.union((u, 0), (v, 0))
            dsu.union((u, 1), (v, 1))
    return any(dsu.find((v, 0)) == dsu.find((v, 1)) for v in members)


def winding_dual_circuit_oracle(domain, open_mask, n1, n2):
    """Dual-open circuit in A(n1, n2) surrounding the origin, by winding parity.

    Faces (fx, fy) stand for dual vertices (fx+1/2, fy+1/2); the circuit may
    use faces whose ring lies in [n1, n2-1] and steps whose crossed primal
    edge is closed or absent from the domain.  A dual cycle surrounds the
    origin iff it crosses the ray {(t, 0): t >= 0} an odd number of times,
    which happens on vertical dual steps between (fx, -1) and (fx, 0) with
    fx >= 0.
    """
    def ring(fx, fy):
        return max(fx if fx >= 0 else -1 - fx, fy if fy >= 0 else -1 - fy)

    def crossed_primal(f1, f2):
        (ax, ay), (bx, by) = sorted((f1, f2))
        if (bx - ax, by - ay) == (1, 0):
            return (ax + 1, ay), (ax + 1, ay + 1)
        return (ax, ay + 1), (ax + 1, ay + 1)

    def step_usable(f1, f2):
        u, v = crossed_primal(f1, f2)
        try:
            uid, vid = domain.vertex_id(*u), domain.vertex_id(*v)
        except KeyError:
            return True  # absent primal edge: never open
        for k in range(int(domain.adjacency[0][uid]), int(domain.adjacency[0][uid + 1])):
            if int(domain.adjacency[1][k]) == vid:
                return not open_mask[int(domain.adjacency[2][k])]
        return True

    faces = [(fx, fy) for fx in range(-n2 - 1, n2 + 1) for fy in range(-n2 - 1, n2 + 1)
             if n1 <= ring(fx, fy) <= n2 - 1]
    face_set = set(faces)
    dsu = _DSU()
    for a in faces:
        fx, fy = a
        for b in ((fx + 1, fy), (fx, fy + 1)):
            if b not in face_set or not step_usable(a, b):
                continue
            vertical_step = b == (fx, fy + 1)
            flips = vertical_step and fy == -1 and fx >= 0
            if flips:
                dsu.union((a, 0), (b, 1))
                dsu.union((a, 1), (b, 0))
            else:
                dsu.union((a, 0), (b, 0))
                dsu.union((a, 1), (b, 1))
    return any(dsu.find((f, 0)) == dsu.find((f, 1)) for f in faces)
