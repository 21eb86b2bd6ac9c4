"""Generate degree-regular closed triangulations used as test fixtures.

Two sources:
  * regular maps {3,d} from a finite group G = <x, z> with x^3 = z^2 = 1 and
    zx of order d: darts are the elements of G, triangles the cosets of <x>,
    and the gluing is right multiplication by z;
  * cyclic k-fold covers of a genus-2 map, cut along a non-separating cycle
    of the 1-skeleton, which keep every vertex degree.

Darts are numbered 3t+i (side of triangle t from corner i to corner i+1) and
every triangle is equilateral with angles 2*pi/d.

usage: python3 gen_fixtures.py OUTDIR
"""
import itertools
import json
import math
import os
import sys


def rho(d):
    return 3 * (d // 3) + (d + 1) % 3


def orbits(iota):
    seen = [False] * len(iota)
    out = []
    for d in range(len(iota)):
        if seen[d]:
            continue
        cyc, e = [], d
        while not seen[e]:
            seen[e] = True
            cyc.append(e)
            e = rho(iota[e])
        out.append(cyc)
    return out


def matmul(a, b, p):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(2)) % p for j in range(2)) for i in range(2)
    )


def group_map(p, x, z, projective):
    """Regular map from the matrix group generated by x and z over Z/p."""
    ident = ((1, 0), (0, 1))

    def canon(m):
        if not projective:
            return m
        neg = tuple(tuple((-v) % p for v in row) for row in m)
        return min(m, neg)

    elems = {canon(ident): None}
    order = [canon(ident)]
    frontier = [canon(ident)]
    while frontier:
        nxt = []
        for g in frontier:
            for h in (x, z):
                k = canon(matmul(g, h, p))
                if k not in elems:
                    elems[k] = None
                    order.append(k)
                    nxt.append(k)
        frontier = nxt
    label = {}
    tri = 0
    for g in order:
        if g in label:
            continue
        gx = canon(matmul(g, x, p))
        gxx = canon(matmul(gx, x, p))
        label[g], label[gx], label[gxx] = 3 * tri, 3 * tri + 1, 3 * tri + 2
        tri += 1
    iota = [0] * len(order)
    for g in order:
        iota[label[g]] = label[canon(matmul(g, z, p))]
    return iota


def skeleton(iota):
    orb = orbits(iota)
    vert = [0] * len(iota)
    for k, o in enumerate(orb):
        for d in o:
            vert[d] = k
    return orb, vert


def nonseparating_cycle(iota):
    """A cycle of skeleton edges that does not separate, as a list of darts.

    Tree-cotree: a spanning tree of the skeleton, a spanning tree of the dual
    among the remaining edges, and any leftover edge closes a fundamental
    cycle that is nonzero in homology.
    """
    orb, vert = skeleton(iota)
    n = len(iota)
    edges = [d for d in range(n) if d < iota[d]]
    parent = {0: None}
    stack = [0]
    tree = set()
    adj = {}
    for d in edges:
        adj.setdefault(vert[d], []).append(d)
        adj.setdefault(vert[rho(d)], []).append(d)
    while stack:
        v = stack.pop()
        for d in adj[v]:
            w = vert[rho(d)] if vert[d] == v else vert[d]
            if w not in parent:
                parent[w] = (v, d)
                tree.add(d)
                stack.append(w)
    f = n // 3
    seen = {0}
    stack = [0]
    cotree = set()
    while stack:
        t = stack.pop()
        for i in range(3):
            d = 3 * t + i
            e = min(d, iota[d])
            u = iota[d] // 3
            if e in tree or u in seen:
                continue
            seen.add(u)
            cotree.add(e)
            stack.append(u)
    leftover = [d for d in edges if d not in tree and d not in cotree]
    assert len(leftover) % 2 == 0 and leftover
    d = leftover[0]
    a, b = vert[d], vert[rho(d)]

    def path_to_root(v):
        out = []
        while parent[v] is not None:
            u, e = parent[v]
            out.append((v, u, e))
            v = u
        return out

    pa, pb = path_to_root(a), path_to_root(b)
    anc_a = [a] + [u for (_, u, _) in pa]
    anc_b = [b] + [u for (_, u, _) in pb]
    common = next(v for v in anc_a if v in set(anc_b))
    cyc = [(a, b, d)]
    # from b up to the common ancestor
    v = b
    while v != common:
        u, e = parent[v]
        cyc.append((v, u, e))
        v = u
    down = []
    v = a
    while v != common:
        u, e = parent[v]
        down.append((u, v, e))
        v = u
    cyc.extend(reversed(down))
    # orient each edge along the cycle: choose the dart starting at the cycle's tail
    darts = []
    for (s, t, e) in cyc:
        if vert[e] == s and vert[rho(e)] == t:
            darts.append(e)
        else:
            darts.append(iota[e])
    return darts


def cyclic_cover(iota, k):
    cyc = nonseparating_cycle(iota)
    volt = {}
    for d in cyc:
        volt[d] = 1
        volt[iota[d]] = -1
    n = len(iota)
    f = n // 3
    new = [0] * (n * k)
    for s in range(k):
        for d in range(n):
            t, i = d // 3, d % 3
            e = iota[d]
            s2 = (s + volt.get(d, 0)) % k
            new[3 * (s * f + t) + i] = 3 * (s2 * f + e // 3) + e % 3
    return new


def check(iota, deg):
    orb, vert = skeleton(iota)
    assert all(len(o) == deg for o in orb), sorted(len(o) for o in orb)
    assert all(iota[iota[d]] == d and iota[d] != d for d in range(len(iota)))
    f = len(iota) // 3
    seen, stack = {0}, [0]
    while stack:
        t = stack.pop()
        for i in range(3):
            u = iota[3 * t + i] // 3
            if u not in seen:
                seen.add(u)
                stack.append(u)
    assert len(seen) == f, "disconnected"
    loops = sum(1 for d in range(len(iota)) if vert[d] == vert[rho(d)])
    v = len(orb)
    genus = (2 - v + 3 * f // 2 - f) // 2
    return v, f, genus, loops


def write(iota, deg, path):
    v, f, genus, loops = check(iota, deg)
    a = 2 * math.pi / deg
    doc = {
        "kind": "closed",
        "triangles": f,
        "gluing": [[d, iota[d]] for d in range(len(iota)) if d < iota[d]],
        "rotation": [rho(d) for d in range(len(iota))],
        "angles": [[a, a, a] for _ in range(f)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    print(f"{os.path.basename(path)}: degree {deg}, V={v}, F={f}, genus {genus}, loop sides {loops}")


def main():
    out = sys.argv[1]
    g2 = group_map(3, ((0, 1), (2, 2)), ((1, 0), (0, 2)), projective=False)
    write(g2, 8, os.path.join(out, "genus2_deg8.json"))
    for k, g in [(2, 3), (3, 4), (4, 5)]:
        write(cyclic_cover(g2, k), 8, os.path.join(out, f"genus{g}_deg8.json"))
    klein = None
    mats = [m for m in itertools.product(range(7), repeat=4) if (m[0] * m[3] - m[1] * m[2]) % 7 == 1]
    mats = [((a, b), (c, d)) for a, b, c, d in mats]
    ident = ((1, 0), (0, 1))

    def porder(m):
        k, y = 1, m
        while y not in (ident, ((6, 0), (0, 6))):
            y = matmul(y, m, 7)
            k += 1
        return k

    for x in mats:
        if porder(x) != 3:
            continue
        for z in mats:
            if porder(z) != 2 or porder(matmul(z, x, 7)) != 7:
                continue
            cand = group_map(7, x, z, projective=True)
            if len(cand) == 168:
                klein = cand
                break
        if klein:
            break
    write(klein, 7, os.path.join(out, "genus3_deg7.json"))


if __name__ == "__main__":
    main()
