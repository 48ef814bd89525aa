"""Linear/mixed-integer program assembly from reusable constraint templates.

The builder registers variables under a fixed naming scheme that doubles as
the cross-reference contract for the low-level define_var/set_objective API:

    xp_c{cid}_p{idx}   fraction of class cid on its idx-th candidate path
    al_c{cid}          routed fraction of class cid's demand
    bp_c{cid}_p{idx}   path enabled (binary)
    bn_{nid}           node enabled (binary)
    be_{src}_{dst}     directed link enabled (binary)
    nc_{nid}_{res}     capacity allocated for res at node
    el_{src}_{dst}_{res}  load on a link for res
    nl_{nid}_{res}     load on a node for res

Each template may be installed once; a second call raises TemplateError.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .paths import PathSet
from .topology import TBA, Topology
from .traffic import TrafficMatrix

CONTINUOUS = "continuous"
BINARY = "binary"

LE, EQ, GE = "<=", "=", ">="

MIN, MAX = "min", "max"


class ModelError(ValueError):
    """Invalid variable/constraint construction."""


class TemplateError(ModelError):
    """A constraint template was applied twice or out of order."""


@dataclass(frozen=True)
class VarDef:
    name: str
    index: int
    lb: float
    ub: float
    integrality: str = CONTINUOUS


class VarTable:
    """Ordered variable registry; names are unique, indices are dense."""

    def __init__(self):
        self._defs = []
        self._by_name = {}

    def add(self, name: str, lb: float, ub: float, integrality: str = CONTINUOUS) -> int:
        if name in self._by_name:
            raise ModelError(f"variable {name!r} already defined")
        if not (lb <= ub):
            raise ModelError(f"variable {name!r}: lb {lb} > ub {ub}")
        if integrality == BINARY and (lb < 0 or ub > 1):
            raise ModelError(f"binary variable {name!r} must be bounded within [0, 1]")
        idx = len(self._defs)
        self._defs.append(VarDef(name, idx, float(lb), float(ub), integrality))
        self._by_name[name] = idx
        return idx

    def index(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def __contains__(self, name):
        return name in self._by_name

    def __len__(self):
        return len(self._defs)

    def __iter__(self):
        return iter(self._defs)

    def __getitem__(self, idx) -> VarDef:
        return self._defs[idx]

    def names(self) -> list:
        return [d.name for d in self._defs]


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: tuple  # ((var_index, coefficient), ...) sorted by index
    rel: str
    rhs: float


@dataclass(frozen=True)
class Objective:
    coeffs: tuple  # ((var_index, coefficient), ...) sorted by index
    direction: str = MIN


class ProgramModel:
    """Compiled variable table + linear rows + objective. Immutable."""

    def __init__(self, var_table: VarTable, rows, objective: Objective):
        n = len(var_table)
        for row in rows:
            if row.rel not in (LE, EQ, GE):
                raise ModelError(f"row {row.name!r}: bad relation {row.rel!r}")
            for idx, coef in row.coeffs:
                if not 0 <= idx < n:
                    raise ModelError(f"row {row.name!r} references variable index {idx}")
                if not math.isfinite(coef):
                    raise ModelError(f"row {row.name!r} has non-finite coefficient")
            if not math.isfinite(row.rhs):
                raise ModelError(f"row {row.name!r} has non-finite rhs")
        for idx, coef in objective.coeffs:
            if not 0 <= idx < n:
                raise ModelError(f"objective references variable index {idx}")
            if not math.isfinite(coef):
                raise ModelError("objective has non-finite coefficient")
        self.var_table = var_table
        self.rows = tuple(rows)
        self.objective = objective

    @property
    def num_vars(self) -> int:
        return len(self.var_table)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def has_integers(self) -> bool:
        return any(d.integrality == BINARY for d in self.var_table)

    def binary_indices(self) -> list:
        return [d.index for d in self.var_table if d.integrality == BINARY]


def _norm_coeffs(pairs) -> tuple:
    merged = {}
    for idx, coef in pairs:
        merged[idx] = merged.get(idx, 0.0) + float(coef)
    return tuple(sorted((i, c) for i, c in merged.items() if c != 0.0))


# ---------------------------------------------------------------------------
# Variable-name helpers (the public naming contract)


def xp_name(cid, idx):
    return f"xp_c{cid}_p{idx}"


def al_name(cid):
    return f"al_c{cid}"


def bp_name(cid, idx):
    return f"bp_c{cid}_p{idx}"


def bn_name(nid):
    return f"bn_{nid}"


def be_name(src, dst):
    return f"be_{src}_{dst}"


def nc_name(nid, resource):
    return f"nc_{nid}_{resource}"


def el_name(src, dst, resource):
    return f"el_{src}_{dst}_{resource}"


def nl_name(nid, resource):
    return f"nl_{nid}_{resource}"


class PrevSolution:
    """Path fractions from a previous solve, keyed by (class id, path index)."""

    def __init__(self, fractions):
        self._fractions = {}
        for key, val in dict(fractions).items():
            val = float(val)
            if val < -1e-9 or val > 1 + 1e-9:
                raise ModelError(f"previous fraction {key} = {val} outside [0, 1]")
            self._fractions[(int(key[0]), int(key[1]))] = min(1.0, max(0.0, val))

    def get(self, cid, idx) -> float:
        # pairs absent from the previous solution are treated as unused paths
        return self._fractions.get((cid, idx), 0.0)


class OptBuilder:
    """Single-writer builder; compiles to an immutable ProgramModel."""

    def __init__(self, topo: Topology, tm: TrafficMatrix, pptc: PathSet):
        missing = [tc.id for tc in tm if tc.id not in pptc or not pptc.paths(tc.id)]
        if missing:
            raise ModelError(f"classes without candidate paths: {missing}")
        self.topo = topo
        self.tm = tm
        self.pptc = pptc
        self.vars = VarTable()
        self.rows = []
        self.objective = Objective(coeffs=(), direction=MIN)
        self._installed = set()
        self._binary_kinds = set()
        # metadata consumed by check_solution and the churn extension
        self._caps = {"link": {}, "node": {}}
        self._tba_nodes = {}          # (nid, resource) -> big-M constant
        self._load_vars = {}          # ("node"|"link", resource) -> [var names]
        self._maxload_aux = {}        # ("node"|"link", resource) -> aux var name
        self._activation = {"require_all_nodes": set(), "require_some_nodes": set(),
                            "require_all_edges": set(), "path_disable": set(),
                            "single_path": set()}
        for tc in self._classes():
            for idx in range(len(pptc.paths(tc.id))):
                self.vars.add(xp_name(tc.id, idx), 0.0, 1.0)
            self.vars.add(al_name(tc.id), 0.0, 1.0)

    # -- internals ---------------------------------------------------------

    def _classes(self):
        return sorted(self.tm, key=lambda tc: tc.id)

    def _paths(self, cid):
        return self.pptc.paths(cid)

    def _add_row(self, name, pairs, rel, rhs):
        self.rows.append(Row(name=name, coeffs=_norm_coeffs(pairs), rel=rel, rhs=float(rhs)))

    def _require_once(self, key):
        if key in self._installed:
            raise TemplateError(f"template {key!r} already installed")
        self._installed.add(key)

    def _idx(self, name):
        return self.vars.index(name)

    def _fn_value(self, fn, *args) -> float:
        val = fn(*args)
        if val is None:
            return 0.0
        val = float(val)
        if not math.isfinite(val) or val < 0:
            raise ModelError(f"cost function returned invalid value {val}")
        return val

    # -- low-level name accessors (mirror the naming contract) --------------

    def xp(self, cid, idx):
        return xp_name(cid, idx)

    def al(self, cid):
        return al_name(cid)

    def bp(self, cid, idx):
        return bp_name(cid, idx)

    def bn(self, nid):
        return bn_name(nid)

    def be(self, src, dst):
        return be_name(src, dst)

    def nc(self, nid, resource):
        return nc_name(nid, resource)

    def el(self, src, dst, resource):
        return el_name(src, dst, resource)

    def nl(self, nid, resource):
        return nl_name(nid, resource)

    # -- binary variables ----------------------------------------------------

    def add_binary_variables(self, kinds) -> None:
        kinds = set(kinds)
        unknown = kinds - {"path", "node", "edge"}
        if unknown:
            raise ModelError(f"unknown binary kinds {sorted(unknown)}")
        dup = kinds & self._binary_kinds
        if dup:
            raise TemplateError(f"binary variables {sorted(dup)} already registered")
        if "path" in kinds:
            for tc in self._classes():
                for idx in range(len(self._paths(tc.id))):
                    self.vars.add(bp_name(tc.id, idx), 0.0, 1.0, BINARY)
        if "node" in kinds:
            for nid in self.topo.node_ids():
                self.vars.add(bn_name(nid), 0.0, 1.0, BINARY)
        if "edge" in kinds:
            for link in self.topo.links:
                self.vars.add(be_name(link.src, link.dst), 0.0, 1.0, BINARY)
        self._binary_kinds |= kinds
        if "node" in kinds:
            # capacity vars allocated before the binaries existed still need
            # the disabled-node-gets-zero linking rows
            for (nid, resource), big_m in self._tba_nodes.items():
                self._link_tba(nid, resource, big_m)

    def _link_tba(self, nid, resource, big_m):
        name = f"nctba_{nid}_{resource}"
        if any(r.name == name for r in self.rows):
            return
        self._add_row(name,
                      [(self._idx(nc_name(nid, resource)), 1.0),
                       (self._idx(bn_name(nid)), -big_m)],
                      LE, 0.0)

    # -- routing templates ---------------------------------------------------

    def add_allocate_flow(self) -> None:
        """Per class: the path fractions sum to the class allocation."""
        self._require_once("allocate_flow")
        for tc in self._classes():
            pairs = [(self._idx(xp_name(tc.id, i)), 1.0) for i in range(len(self._paths(tc.id)))]
            pairs.append((self._idx(al_name(tc.id)), -1.0))
            self._add_row(f"alloc_c{tc.id}", pairs, EQ, 0.0)

    def add_route_all(self, classes=None) -> None:
        """Per class in the subset (default all): full demand is routed."""
        if "allocate_flow" not in self._installed:
            raise TemplateError("add_route_all requires add_allocate_flow first")
        self._require_once("route_all")
        for cid in self._class_subset(classes):
            self._add_row(f"routeall_c{cid}", [(self._idx(al_name(cid)), 1.0)], EQ, 1.0)

    def add_enforce_single_path(self, classes=None) -> None:
        """At most one enabled, flow-carrying path per class."""
        self._require_once("enforce_single_path")
        self._need_binaries("path")
        for cid in self._class_subset(classes):
            n = len(self._paths(cid))
            self._add_row(f"single_c{cid}",
                          [(self._idx(bp_name(cid, i)), 1.0) for i in range(n)], LE, 1.0)
            for i in range(n):
                self._add_row(f"singlex_c{cid}_p{i}",
                              [(self._idx(xp_name(cid, i)), 1.0),
                               (self._idx(bp_name(cid, i)), -1.0)], LE, 0.0)
            self._activation["single_path"].add(cid)

    def _class_subset(self, classes):
        if classes is None:
            return [tc.id for tc in self._classes()]
        ids = sorted({int(c) for c in classes})
        known = {tc.id for tc in self.tm}
        bad = [c for c in ids if c not in known]
        if bad:
            raise ModelError(f"unknown classes {bad}")
        return ids

    def _need_binaries(self, kind):
        if kind not in self._binary_kinds:
            raise TemplateError(f"{kind} binary variables are not registered")

    # -- capacity templates ----------------------------------------------------

    def add_link_capacity(self, resource: str, caps: dict, fn) -> None:
        """Define link loads for `resource` and cap the listed links.

        fn(link, tc, path, resource) is the load contributed if all of the
        class's traffic used that path; it is scaled by the path fraction.
        Links not listed in caps stay unconstrained.
        """
        self._require_once(("link_capacity", resource))
        for key in caps:
            if not self.topo.has_link(*key):
                raise ModelError(f"unknown link {key}")
        for (src, dst) in sorted(caps):
            cap = float(caps[(src, dst)])
            link = self.topo.link(src, dst)
            el_idx = self.vars.add(el_name(src, dst, resource), 0.0, cap)
            pairs = [(el_idx, -1.0)]
            for tc in self._classes():
                for i, path in enumerate(self._paths(tc.id)):
                    if (src, dst) in path.links:
                        val = self._fn_value(fn, link, tc, path, resource)
                        if val:
                            pairs.append((self._idx(xp_name(tc.id, i)), val))
            self._add_row(f"eldef_{src}_{dst}_{resource}", pairs, EQ, 0.0)
            self._caps["link"][(src, dst, resource)] = cap
            self._load_vars.setdefault(("link", resource), []).append(el_name(src, dst, resource))

    def add_node_capacity(self, resource: str, caps: dict, fn) -> None:
        """Define node loads for `resource` and cap the listed nodes.

        A concrete capacity pins nc; the TBA sentinel leaves nc as a free
        non-negative allocation decided by the optimizer. When node binaries
        exist, TBA nodes get a linking row so disabled nodes carry zero
        allocated capacity.
        """
        self._require_once(("node_capacity", resource))
        for nid in caps:
            if not self.topo.has_node(nid):
                raise ModelError(f"unknown node {nid}")
        for nid in sorted(caps):
            cap = caps[nid]
            node = self.topo.node(nid)
            tba = cap == TBA
            if tba:
                nc_idx = self.vars.add(nc_name(nid, resource), 0.0, math.inf)
            else:
                cap = float(cap)
                nc_idx = self.vars.add(nc_name(nid, resource), cap, cap)
                self._caps["node"][(nid, resource)] = cap
            nl_idx = self.vars.add(nl_name(nid, resource), 0.0, math.inf)
            pairs = [(nl_idx, -1.0)]
            big_m = 0.0
            for tc in self._classes():
                best = 0.0
                for i, path in enumerate(self._paths(tc.id)):
                    if nid in path.nodes:
                        val = self._fn_value(fn, node, tc, path, resource)
                        if val:
                            pairs.append((self._idx(xp_name(tc.id, i)), val))
                        best = max(best, val)
                big_m += best
            self._add_row(f"nldef_{nid}_{resource}", pairs, EQ, 0.0)
            self._add_row(f"nlcap_{nid}_{resource}", [(nl_idx, 1.0), (nc_idx, -1.0)], LE, 0.0)
            self._load_vars.setdefault(("node", resource), []).append(nl_name(nid, resource))
            if tba:
                self._tba_nodes[(nid, resource)] = big_m
                if "node" in self._binary_kinds:
                    self._link_tba(nid, resource, big_m)

    def add_node_capacity_per_path(self, resource: str, caps: dict, fn) -> None:
        """Node loads driven by enabled paths rather than traffic volume."""
        self._require_once(("node_capacity_per_path", resource))
        self._need_binaries("path")
        for nid in caps:
            if not self.topo.has_node(nid):
                raise ModelError(f"unknown node {nid}")
        for nid in sorted(caps):
            cap = float(caps[nid])
            node = self.topo.node(nid)
            nc_idx = self.vars.add(nc_name(nid, resource), cap, cap)
            nl_idx = self.vars.add(nl_name(nid, resource), 0.0, math.inf)
            pairs = [(nl_idx, -1.0)]
            for tc in self._classes():
                for i, path in enumerate(self._paths(tc.id)):
                    if nid in path.nodes:
                        val = self._fn_value(fn, node, tc, path, resource)
                        if val:
                            pairs.append((self._idx(bp_name(tc.id, i)), val))
            self._add_row(f"nldef_{nid}_{resource}", pairs, EQ, 0.0)
            self._add_row(f"nlcap_{nid}_{resource}", [(nl_idx, 1.0), (nc_idx, -1.0)], LE, 0.0)
            self._caps["node"][(nid, resource)] = cap
            self._load_vars.setdefault(("node", resource), []).append(nl_name(nid, resource))

    def add_capacity_budget(self, resource: str, nodes, tot_cap: float) -> None:
        """Limit the total resource allocation across a node subset."""
        self._require_once(("capacity_budget", resource))
        pairs = []
        for nid in sorted(set(nodes)):
            name = nc_name(nid, resource)
            if name not in self.vars:
                raise ModelError(f"no allocated capacity variable for node {nid}, resource {resource!r}")
            pairs.append((self._idx(name), 1.0))
        self._add_row(f"budgetcap_{resource}", pairs, LE, float(tot_cap))

    # -- activation templates ---------------------------------------------------

    def add_require_all_nodes(self, classes=None) -> None:
        """A path may be enabled only if every node on it is enabled."""
        self._require_once("require_all_nodes")
        self._need_binaries("path")
        self._need_binaries("node")
        for cid in self._class_subset(classes):
            for i, path in enumerate(self._paths(cid)):
                for nid in path.nodes:
                    self._add_row(f"reqalln_c{cid}_p{i}_n{nid}",
                                  [(self._idx(bp_name(cid, i)), 1.0),
                                   (self._idx(bn_name(nid)), -1.0)], LE, 0.0)
            self._activation["require_all_nodes"].add(cid)

    def add_require_some_nodes(self, classes=None) -> None:
        """A path may be enabled only if at least one node on it is enabled."""
        self._require_once("require_some_nodes")
        self._need_binaries("path")
        self._need_binaries("node")
        for cid in self._class_subset(classes):
            for i, path in enumerate(self._paths(cid)):
                pairs = [(self._idx(bp_name(cid, i)), 1.0)]
                pairs += [(self._idx(bn_name(nid)), -1.0) for nid in path.nodes]
                self._add_row(f"reqsomen_c{cid}_p{i}", pairs, LE, 0.0)
            self._activation["require_some_nodes"].add(cid)

    def add_require_all_edges(self, classes=None) -> None:
        """A path may be enabled only if every link on it is enabled."""
        self._require_once("require_all_edges")
        self._need_binaries("path")
        self._need_binaries("edge")
        for cid in self._class_subset(classes):
            for i, path in enumerate(self._paths(cid)):
                for (src, dst) in path.links:
                    self._add_row(f"reqalle_c{cid}_p{i}_e{src}_{dst}",
                                  [(self._idx(bp_name(cid, i)), 1.0),
                                   (self._idx(be_name(src, dst)), -1.0)], LE, 0.0)
            self._activation["require_all_edges"].add(cid)

    def add_path_disable(self, classes=None) -> None:
        """A path may carry traffic only if it is enabled."""
        self._require_once("path_disable")
        self._need_binaries("path")
        for cid in self._class_subset(classes):
            for i in range(len(self._paths(cid))):
                self._add_row(f"pdis_c{cid}_p{i}",
                              [(self._idx(xp_name(cid, i)), 1.0),
                               (self._idx(bp_name(cid, i)), -1.0)], LE, 0.0)
            self._activation["path_disable"].add(cid)

    def add_budget(self, node_budget_fn, k: float) -> None:
        """Total cost of enabled nodes stays within k."""
        self._require_once("budget")
        self._need_binaries("node")
        pairs = []
        for nid in self.topo.node_ids():
            cost = self._fn_value(node_budget_fn, self.topo.node(nid))
            if cost:
                pairs.append((self._idx(bn_name(nid)), cost))
        self._add_row("budget_nodes", pairs, LE, float(k))

    # -- objectives ---------------------------------------------------------------

    def _ensure_maxload_aux(self, kind: str, resource: str) -> str:
        key = (kind, resource)
        if key in self._maxload_aux:
            return self._maxload_aux[key]
        load_names = self._load_vars.get(key, [])
        if not load_names:
            raise ModelError(f"no {kind} load variables for resource {resource!r}; "
                             "install the matching capacity template first")
        aux = f"maxload_{kind}_{resource}"
        aux_idx = self.vars.add(aux, 0.0, math.inf)
        for name in load_names:
            self._add_row(f"maxrow_{name}", [(self._idx(name), 1.0), (aux_idx, -1.0)], LE, 0.0)
        self._maxload_aux[key] = aux
        return aux

    def set_predefined_objective(self, name: str, resource: str = None,
                                 routing_cost_fn=None) -> None:
        if name == "maxAllFlow":
            pairs = [(self._idx(al_name(tc.id)), 1.0) for tc in self._classes()]
            self.objective = Objective(coeffs=_norm_coeffs(pairs), direction=MAX)
        elif name in ("minMaxNodeLoad", "minMaxLinkLoad"):
            if resource is None:
                raise ModelError(f"{name} requires a resource")
            kind = "node" if name == "minMaxNodeLoad" else "link"
            aux = self._ensure_maxload_aux(kind, resource)
            self.objective = Objective(coeffs=((self._idx(aux), 1.0),), direction=MIN)
        elif name == "minRoutingCost":
            if routing_cost_fn is None:
                raise ModelError("minRoutingCost requires a routing cost function")
            pairs = []
            for tc in self._classes():
                for i, path in enumerate(self._paths(tc.id)):
                    cost = float(routing_cost_fn(path))
                    if cost:
                        pairs.append((self._idx(xp_name(tc.id, i)), cost))
            self.objective = Objective(coeffs=_norm_coeffs(pairs), direction=MIN)
        else:
            raise ModelError(f"unknown predefined objective {name!r}")

    def define_var(self, name: str, coeffs: dict, lb: float = -math.inf,
                   ub: float = math.inf) -> str:
        """New variable pinned to a linear combination of existing ones."""
        pairs = [(self._idx(ref), float(c)) for ref, c in sorted(coeffs.items())]
        idx = self.vars.add(name, lb, ub)
        self._add_row(f"defvar_{name}", [(idx, 1.0)] + [(i, -c) for i, c in pairs], EQ, 0.0)
        return name

    def set_objective(self, coeffs: dict, direction: str) -> None:
        if direction not in (MIN, MAX):
            raise ModelError(f"objective direction must be 'min' or 'max', got {direction!r}")
        pairs = [(self._idx(name), float(c)) for name, c in sorted(coeffs.items())]
        self.objective = Objective(coeffs=_norm_coeffs(pairs), direction=direction)

    # -- reconfiguration extension ---------------------------------------------

    def add_min_churn(self, prev: PrevSolution, w: float, resource: str = None,
                      base: str = "node") -> None:
        """Composite objective trading the base load objective against churn.

        Churn is the largest per-path change versus the previous fractions;
        the objective becomes (1 - w) * base + w * churn. base names a
        min-max load kind ("node" or "link" over `resource`); base=None reuses
        the currently installed objective row (which must be a minimization).
        """
        if not 0.0 <= w <= 1.0:
            raise ModelError(f"churn weight must be within [0, 1], got {w}")
        self._require_once("min_churn")
        if base is not None:
            aux = self._ensure_maxload_aux(base, resource)
            base_pairs = [(self._idx(aux), 1.0)]
        else:
            if self.objective.direction != MIN:
                raise ModelError("churn composite requires a minimization base objective")
            base_pairs = list(self.objective.coeffs)
        diff_idx = self.vars.add("Diff", 0.0, math.inf)
        for tc in self._classes():
            for i in range(len(self._paths(tc.id))):
                eps_idx = self.vars.add(f"eps_c{tc.id}_p{i}", 0.0, math.inf)
                xp_idx = self._idx(xp_name(tc.id, i))
                prev_val = prev.get(tc.id, i)
                self._add_row(f"diffge_c{tc.id}_p{i}", [(diff_idx, 1.0), (eps_idx, -1.0)], GE, 0.0)
                self._add_row(f"churnlo_c{tc.id}_p{i}", [(xp_idx, 1.0), (eps_idx, 1.0)], GE, prev_val)
                self._add_row(f"churnhi_c{tc.id}_p{i}", [(xp_idx, 1.0), (eps_idx, -1.0)], LE, prev_val)
        pairs = [(idx, (1.0 - w) * coef) for idx, coef in base_pairs]
        pairs.append((diff_idx, w))
        self.objective = Objective(coeffs=_norm_coeffs(pairs), direction=MIN)

    # -- compilation ---------------------------------------------------------------

    def build(self) -> ProgramModel:
        return ProgramModel(self.vars, list(self.rows), self.objective)

    def get_path_fractions(self, solution) -> dict:
        """Per-class list of xp values extracted from a solved model."""
        out = {}
        for tc in self._classes():
            out[tc.id] = [solution.values.get(xp_name(tc.id, i), 0.0)
                          for i in range(len(self._paths(tc.id)))]
        return out


def new_optimization(topo: Topology, tm: TrafficMatrix, pptc: PathSet) -> OptBuilder:
    """Start an empty optimization with xp/al variables registered."""
    return OptBuilder(topo, tm, pptc)


# ---------------------------------------------------------------------------
# Solution soundness checks (shared by tests and the acceptance suite)


def check_solution(builder: OptBuilder, solution, tol: float = 1e-6) -> list:
    """Return a list of violated soundness properties (empty = all good).

    Checks flow conservation, capacity safety, activation-ordering soundness
    and zero-capacity-when-disabled, using the builder's metadata.
    """
    problems = []
    vals = solution.values

    def v(name):
        return vals.get(name, 0.0)

    if "allocate_flow" in builder._installed:
        for tc in sorted(builder.tm, key=lambda t: t.id):
            total = sum(v(xp_name(tc.id, i)) for i in range(len(builder.pptc.paths(tc.id))))
            if abs(total - v(al_name(tc.id))) > tol:
                problems.append(f"flow conservation violated for class {tc.id}")
    for (src, dst, res), cap in builder._caps["link"].items():
        if v(el_name(src, dst, res)) > cap + tol:
            problems.append(f"link ({src},{dst}) over capacity for {res}")
    for (nid, res), cap in builder._caps["node"].items():
        if v(nl_name(nid, res)) > cap + tol:
            problems.append(f"node {nid} over capacity for {res}")
    for (nid, res) in builder._tba_nodes:
        if v(nl_name(nid, res)) > v(nc_name(nid, res)) + tol:
            problems.append(f"node {nid} exceeds allocated {res} capacity")
        if "node" in builder._binary_kinds and v(bn_name(nid)) < 0.5:
            if v(nc_name(nid, res)) > tol:
                problems.append(f"disabled node {nid} has nonzero allocated {res}")
    act = builder._activation
    for tc in sorted(builder.tm, key=lambda t: t.id):
        cid = tc.id
        for i, path in enumerate(builder.pptc.paths(cid)):
            if cid in act["path_disable"] or cid in act["single_path"]:
                if v(xp_name(cid, i)) > v(bp_name(cid, i)) + tol:
                    problems.append(f"class {cid} path {i} carries traffic while disabled")
            if cid in act["require_all_nodes"]:
                for nid in path.nodes:
                    if v(bp_name(cid, i)) > v(bn_name(nid)) + tol:
                        problems.append(f"class {cid} path {i} enabled across disabled node {nid}")
            if cid in act["require_all_edges"]:
                for (s, d) in path.links:
                    if v(bp_name(cid, i)) > v(be_name(s, d)) + tol:
                        problems.append(f"class {cid} path {i} enabled across disabled link ({s},{d})")
            if cid in act["require_some_nodes"]:
                if v(bp_name(cid, i)) > sum(v(bn_name(n)) for n in path.nodes) + tol:
                    problems.append(f"class {cid} path {i} enabled with no enabled node")
    return problems
