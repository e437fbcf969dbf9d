"""Precomputed per-vertex structure driving the cycle kernels.

A plan fixes, for every vertex visited in a cycle, the parent set P,
the spouse set K, and the solve set D on which the error covariance is
factorized.  D is the district of the vertex when the district
restriction is active, otherwise all other vertices; it is empty for
vertices without spouses, whose update is a plain regression on the
parents.  Both kernel backends consume the same plan, the compiled one
through the flattened int32 arrays.
"""

from __future__ import annotations

import numpy as np

from ..graphs import MixedGraph

__all__ = ["CyclePlan", "build_plan"]


class CyclePlan:
    def __init__(self, graph: MixedGraph, vertices, district_restriction: bool):
        self.graph = graph
        self.district_restriction = district_restriction
        self.vertices = []  # (i, P, K, D, kpos) with sorted int arrays
        p = graph.n_vertices
        for i in vertices:
            pa = np.array(sorted(graph.parents(i)), dtype=np.int32)
            spo = np.array(sorted(graph.spouses(i)), dtype=np.int32)
            if spo.size == 0:
                dis = np.empty(0, dtype=np.int32)
            elif district_restriction:
                dis = np.array(sorted(graph.district(i)), dtype=np.int32)
            else:
                dis = np.array([v for v in range(p) if v != i], dtype=np.int32)
            kpos = np.searchsorted(dis, spo).astype(np.int32)
            self.vertices.append((int(i), pa, spo, dis, kpos))
        self._flatten()

    def _flatten(self):
        g = self.graph
        p = g.n_vertices

        def pack(lists):
            off = np.zeros(len(lists) + 1, dtype=np.int32)
            for t, lst in enumerate(lists):
                off[t + 1] = off[t] + len(lst)
            flat = (np.concatenate(lists).astype(np.int32)
                    if lists and off[-1] else np.empty(0, dtype=np.int32))
            return off, flat

        self.verts = np.array([v[0] for v in self.vertices], dtype=np.int32)
        self.pa_off, self.pa_flat = pack([v[1] for v in self.vertices])
        self.spo_off, self.spo_flat = pack([v[2] for v in self.vertices])
        self.dis_off, self.dis_flat = pack([v[3] for v in self.vertices])
        _, self.kpos_flat = pack([v[4] for v in self.vertices])
        all_pa = [np.array(sorted(g.parents(i)), dtype=np.int32)
                  for i in range(p)]
        self.allpa_off, self.allpa_flat = pack(all_pa)


def build_plan(graph: MixedGraph, vertices, district_restriction: bool) -> CyclePlan:
    return CyclePlan(graph, vertices, district_restriction)
