"""Experiment drivers for the verification suite.

Each driver assembles a mesh/operator system, runs one study, and returns
plain data (error ladders, energy verdicts, sweep curves); CSV writers
turn those into the stable on-disk schemas.  Drivers are deterministic:
no RNG, fixed node orderings, pairwise numpy reductions.

The advection residual is linear in the state, so the energy runs build
the global dense operator once (columns = unit states pushed through the
batched residual) and time-step with a precomputed degree-4 stepping
matrix; one matvec per step is identical to the four-stage explicit
scheme for an autonomous linear system.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import basis as fb
from . import diagnostics as fd
from . import metrics as fmet
from . import operators as fop
from . import schemes as fs
from . import timeint as ft
from .mesh import Mapping, build_mesh, physical_coords, tensor_nodes
from .quadrature import gl_rule, gll_rule

EXPERIMENTS = (
    "derivative-test", "energy", "converge", "c-sweep", "gcl-check", "freestream",
)

DEFAULT_LADDERS = {
    ("derivative-test", 2): (8, 16, 32, 64),
    ("derivative-test", 3): (8, 16, 32, 64),
    ("c-sweep", 2): (8, 16),
    ("c-sweep", 3): (8, 16),
}
OOA_LADDERS = {"nonsym2d": (8, 16, 32, 64), "skewsym2d": (4, 8, 16, 32)}


# --- configuration ----------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment: str
    dim: int = 2
    p: int = 3
    form: str = "esfr_split"
    c: object = "dg"           # float, or preset name "dg" / "plus"
    flux: str = "upwind"
    warp: str = "nonsym2d"
    elements: tuple = ()
    overint: bool = False
    t_final: float = None
    out: str = None
    max_levels: int = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; options: {EXPERIMENTS}"
            )
        if self.form not in fs.FORMS:
            raise ValueError(f"unknown scheme form {self.form!r}")
        if self.flux not in fs.FLUXES:
            raise ValueError(f"unknown flux {self.flux!r}")
        self.elements = tuple(int(n) for n in self.elements)
        if any(b <= a for a, b in zip(self.elements, self.elements[1:])):
            raise ValueError(f"element ladder must strictly refine: {self.elements}")

    def ladder(self):
        lad = self.elements or DEFAULT_LADDERS.get(
            (self.experiment, self.dim)
        ) or OOA_LADDERS.get(self.warp, (8, 16, 32, 64))
        if self.max_levels is not None:
            lad = lad[: self.max_levels]
        return lad

    def c_value(self):
        return resolve_c(self.c, self.p)


def resolve_c(c, p):
    if isinstance(c, str):
        name = c.strip().lower()
        if name == "dg":
            return 0.0
        if name == "plus":
            return fop.c_plus(p)
        return float(name)
    return float(c)


# --- test problems ----------------------------------------------------------

@dataclass(frozen=True)
class TestProblem:
    a: tuple
    u0: object             # u0(X) -> values
    domain: tuple
    t_final: float
    dt_factor: float       # dt = dt_factor * dx

    def exact(self, X, t):
        lo = np.array([d[0] for d in self.domain])
        ext = np.array([d[1] - d[0] for d in self.domain])
        Y = lo + np.mod(X - np.asarray(self.a) * t - lo, ext)
        return self.u0(Y)


def _gaussian(center):
    c = np.asarray(center)

    def u0(X):
        r2 = np.sum((X - c) ** 2, axis=-1)
        return np.exp(-20.0 * r2)

    return u0


def _sine_product(k):
    def u0(X):
        return np.sin(k * X[..., 0]) * np.sin(k * X[..., 1])

    return u0


def advection_problem(warp, kind):
    """The two 2D study problems per warped grid: energy monitoring runs
    use a Gaussian with an irrational-ratio speed; order studies use a
    periodic sine product advected diagonally.

    Order studies step at dt = 0.1 dx: the degree-4 stepping polynomial is
    stable only to dt*rho about 2.8, and the upwind spectral radius on
    these warped grids puts dt = 0.5 dx at 4-7 (measured), far outside.
    At 0.1 dx the time error stays subdominant to the spatial order
    through p = 4 on the asserted ladders."""
    box1, box2 = ((-1.0, 1.0),) * 2, ((0.0, 1.0),) * 2
    speed = (1.1, -np.pi / np.e)
    table = {
        ("nonsym2d", "energy"): TestProblem(speed, _gaussian((0.0, 0.0)), box1, 10.0, 0.05),
        ("nonsym2d", "ooa"): TestProblem((1.0, 1.0), _sine_product(np.pi), box1, 2.0, 0.1),
        ("skewsym2d", "energy"): TestProblem(speed, _gaussian((0.5, 0.5)), box2, 10.0, 0.05),
        ("skewsym2d", "ooa"): TestProblem((1.0, 1.0), _sine_product(2 * np.pi), box2, 1.0, 0.1),
    }
    try:
        return table[(warp, kind)]
    except KeyError:
        raise ValueError(f"no {kind} problem on warp {warp!r}") from None


# --- assembly helpers -------------------------------------------------------

def build_system(dim, p, nel, warp="identity", domain=None, c=0.0,
                 overint=False, metric_form="conservative_curl", q=None):
    """Mesh + reference + metrics + element operators in one call."""
    mapping, topo = build_mesh(dim, nel, q=q or max(p, 1), warp=warp, domain=domain)
    ref = fop.build_reference(
        fb.TensorBasis(p, dim, "lagrange_gll"),
        volume_rule=gl_rule(p + 3) if overint else None,
    )
    met = fmet.compute_metrics(
        mapping, volume_nodes=ref.volume_nodes, facet_nodes=ref.facet_nodes,
        form=metric_form,
    )
    ops = fop.build_element_operators(ref, met, topo, c=fop.CorrectionParameter(c))
    return mapping, topo, ops


def interpolate(fn, mapping, p):
    nodes = tensor_nodes(gll_rule(p + 1).nodes, mapping.dim)
    return fn(physical_coords(mapping, nodes))


def node_spacing(domain_extent, nel, p):
    return domain_extent / (nel * (p + 1))


def _slice_mapping(mapping, sl):
    un = mapping.support_unwarped
    return Mapping(
        dim=mapping.dim, q=mapping.q, basis=mapping.basis,
        grid_nodes_ref=mapping.grid_nodes_ref,
        support_points=mapping.support_points[sl],
        warp=mapping.warp,
        support_unwarped=None if un is None else un[sl],
    )


# --- divergence accuracy (volume-only operator) -----------------------------

def divergence_test_field(dim):
    """Smooth non-polynomial flux field and its exact divergence."""
    if dim == 3:
        def f(X):
            x, y, z = X[..., 0], X[..., 1], X[..., 2]
            return np.stack(
                [np.exp(-10.0 * x ** 2),
                 np.exp(-10.0 * np.pi * y ** 3),
                 np.exp(-10.0 * np.sin(z))], axis=-1
            )

        def div(X):
            x, y, z = X[..., 0], X[..., 1], X[..., 2]
            return -10.0 * (
                2.0 * x * np.exp(-10.0 * x ** 2)
                + 3.0 * np.pi * y ** 2 * np.exp(-10.0 * np.pi * y ** 3)
                + np.cos(z) * np.exp(-10.0 * np.sin(z))
            )

        return f, div
    if dim == 2:
        # The y-component drops the cubic so it stays bounded on domains
        # with negative y (the 2D warps live on [-1,1]^2).
        def f(X):
            x, y = X[..., 0], X[..., 1]
            return np.stack(
                [np.exp(-10.0 * x ** 2), np.exp(-10.0 * np.pi * y ** 2)], axis=-1
            )

        def div(X):
            x, y = X[..., 0], X[..., 1]
            return -10.0 * (
                2.0 * x * np.exp(-10.0 * x ** 2)
                + 2.0 * np.pi * y * np.exp(-10.0 * np.pi * y ** 2)
            )

        return f, div
    raise ValueError("divergence test is defined for dim 2 and 3")


def _divergence_error_level(mapping, topo, ref, c, chunk=256):
    """L2/Linf error of the split volume divergence on one mesh level,
    streamed over element chunks to bound memory on big 3D meshes."""
    f_fn, div_fn = divergence_test_field(mapping.dim)
    basis = ref.basis
    acc = 0.0
    linf = 0.0
    for lo in range(0, mapping.nel, chunk):
        sub = _slice_mapping(mapping, slice(lo, lo + chunk))
        met = fmet.compute_metrics(
            sub, volume_nodes=ref.volume_nodes, facet_nodes=ref.facet_nodes
        )
        ops = fop.build_element_operators(ref, met, topo, c=fop.CorrectionParameter(c))
        f_nodal = f_fn(physical_coords(sub, ref.volume_nodes))
        u_div = fs.split_divergence_volume(f_nodal, ops, norm="esfr")
        err, w, J = fd._sampled_error(u_div, div_fn, sub, basis, fd.OVERINT_EXTRA)
        acc += np.sum(err * err * (w[None, :] * J))
        linf = max(linf, float(np.max(np.abs(err))))
    return float(np.sqrt(acc)), linf


def _warp_for_dim(warp, dim):
    from .mesh import WARP_DIMS

    if WARP_DIMS.get(warp, dim) == dim:
        return warp
    return "heavy3d" if dim == 3 else "nonsym2d"


def _warp_extent(warp, dim):
    from .mesh import WARP_DOMAINS

    domain = WARP_DOMAINS.get(warp, [(0.0, 1.0)] * dim)
    return domain[0][1] - domain[0][0]


def derivative_test(cfg):
    """Divergence-operator error ladder; returns a list of ErrorReport."""
    warp = _warp_for_dim(cfg.warp, cfg.dim)
    extent = _warp_extent(warp, cfg.dim)
    c = cfg.c_value()
    reports = []
    for nel in cfg.ladder():
        mapping, topo = build_mesh(cfg.dim, nel, q=cfg.p, warp=warp)
        ref = fop.build_reference(
            fb.TensorBasis(cfg.p, cfg.dim, "lagrange_gll"),
            volume_rule=gl_rule(cfg.p + 3) if cfg.overint else None,
        )
        l2, linf = _divergence_error_level(mapping, topo, ref, c)
        reports.append(fd.ErrorReport(
            l2=l2, linf=linf, dx=node_spacing(extent, nel, cfg.p),
            p=cfg.p, dim=cfg.dim, scheme=cfg.form, c=c, flux="",
        ))
    return reports


# --- linear time stepping via the dense global operator ---------------------

def assemble_global_operator(ops, cfg):
    """Dense action of the residual on the flattened state."""
    nel, Np = ops.nel, ops.ref.Np
    ndof = nel * Np
    basis_states = np.eye(ndof).reshape(nel, Np, ndof)
    return fs.residual(basis_states, ops, cfg).reshape(ndof, ndof)


def rk4_step_matrix(A, dt):
    """I + dtA + .. + (dtA)^4/24: one application = one four-stage step."""
    ndof = A.shape[0]
    R = np.eye(ndof)
    for k in (4, 3, 2, 1):
        R = np.eye(ndof) + (dt / k) * (A @ R)
    return R


def energy_run(cfg):
    """One monitored run on the warp's energy problem.

    Returns (records, spatial_drift): records carry the actual discrete
    energy E(t), while spatial_drift is the trapezoid accumulation of the
    semi-discrete rate 2 u.N du/dt relative to E(0).  The degree-4 stepping
    polynomial damps every Fourier mode by 1 - (dt*omega)^6/72 + ... per
    step, which floors the raw E(t) drift near 1e-7 for these run lengths
    even when the spatial operator conserves energy exactly; the spatial
    accumulation is the quantity the conservation claim is about, and it
    sits at round-off for the energy-conserving schemes.
    """
    prob = advection_problem(cfg.warp, "energy")
    nel = cfg.elements[0] if cfg.elements else 8
    c = cfg.c_value()
    mapping, topo, ops = build_system(
        cfg.dim, cfg.p, nel, warp=cfg.warp, c=c, overint=cfg.overint
    )
    scheme = fs.SchemeConfig(cfg.form, a=prob.a, flux=cfg.flux, c=ops.c)
    extent = prob.domain[0][1] - prob.domain[0][0]
    dt = prob.dt_factor * node_spacing(extent, nel, cfg.p)
    t_final = prob.t_final if cfg.t_final is None else cfg.t_final

    A = assemble_global_operator(ops, scheme)
    R = rk4_step_matrix(A, dt)
    u = interpolate(prob.u0, mapping, cfg.p).reshape(-1)
    shape = (ops.nel, ops.ref.Np)

    def energy_rate(v):
        dv = (A @ v).reshape(shape)
        return 2.0 * float(np.sum(v.reshape(shape) * np.einsum(
            "mij,mj->mi", ops.N_m, dv)))

    E0, Q0 = ft.monitor_values(u.reshape(shape), ops)
    floor = max(abs(E0), 1e-300)
    records = [ft.MonitorRecord(t=0.0, energy=E0, conserved=Q0)]
    rate_prev = energy_rate(u)
    spatial = 0.0
    n_full = int(np.floor(t_final / dt + 1e-12))
    rem = t_final - n_full * dt
    for k in range(n_full):
        u = R @ u
        E, Q = ft.monitor_values(u.reshape(shape), ops)
        diverged = not np.isfinite(E) or abs(E) > 1e6 * floor
        records.append(ft.MonitorRecord(
            t=(k + 1) * dt, energy=E, conserved=Q, diverged=diverged
        ))
        if diverged:
            return records, spatial / floor
        rate = energy_rate(u)
        spatial += 0.5 * dt * (rate_prev + rate)
        rate_prev = rate
    if rem > 1e-12 * max(dt, 1.0):
        u = rk4_step_matrix(A, rem) @ u
        E, Q = ft.monitor_values(u.reshape(shape), ops)
        records.append(ft.MonitorRecord(t=t_final, energy=E, conserved=Q))
        spatial += 0.5 * rem * (rate_prev + energy_rate(u))
    return records, spatial / floor


@dataclass(frozen=True)
class EnergyVerdict:
    form: str
    flux: str
    c: float
    conserved: bool
    monotone: bool
    diverged: bool
    spatial_drift: float
    final_drift: float


def judge_energy(records, spatial_drift):
    """conserved: the spatial operator added/removed no energy (rate
    accumulation at round-off); monotone: the computed E(t) never rose."""
    E0 = records[0].energy
    floor = max(abs(E0), 1e-300)
    diverged = any(r.diverged for r in records)
    energies = [r.energy for r in records]
    drift = (energies[-1] - E0) / floor
    conserved = (not diverged) and abs(spatial_drift) <= 1e-10
    monotone = (not diverged) and all(
        b <= a + 1e-12 * floor for a, b in zip(energies, energies[1:])
    )
    return conserved, monotone, diverged, drift


def energy_study(cfg):
    """Scheme-by-flux verdict matrix on the configured warp's energy
    problem.  The filtered classical form with upwinding decays too slowly
    to call either way from theory; its row is reported from the data like
    every other, with no special casing."""
    rows = [
        ("dg_conservative", 0.0),
        ("esfr_split", 0.0),
        ("esfr_split", fop.c_plus(cfg.p)),
        ("esfr_classical_split", fop.c_plus(cfg.p)),
    ]
    verdicts = []
    for form, c in rows:
        for flux in ("central", "upwind"):
            run_cfg = ExperimentConfig(
                experiment="energy", dim=cfg.dim, p=cfg.p, form=form, c=c,
                flux=flux, warp=cfg.warp, elements=cfg.elements,
                overint=cfg.overint, t_final=cfg.t_final,
            )
            records, spatial = energy_run(run_cfg)
            conserved, monotone, diverged, drift = judge_energy(records, spatial)
            verdicts.append(EnergyVerdict(
                form=form, flux=flux, c=c, conserved=conserved,
                monotone=monotone, diverged=diverged,
                spatial_drift=spatial, final_drift=drift,
            ))
    return verdicts


# --- advection convergence --------------------------------------------------

def convergence_study(cfg):
    """Error ladder for the warp's order-study problem; returns reports."""
    prob = advection_problem(cfg.warp, "ooa")
    c = cfg.c_value()
    t_final = prob.t_final if cfg.t_final is None else cfg.t_final
    extent = prob.domain[0][1] - prob.domain[0][0]
    reports = []
    for nel in cfg.ladder():
        mapping, topo, ops = build_system(
            cfg.dim, cfg.p, nel, warp=cfg.warp, c=c, overint=cfg.overint
        )
        scheme = fs.SchemeConfig(cfg.form, a=prob.a, flux=cfg.flux, c=ops.c)
        dx = node_spacing(extent, nel, cfg.p)
        u0 = interpolate(prob.u0, mapping, cfg.p)
        state, _ = ft.run(
            ft.SolutionState(u=u0), ops, scheme, t_final, prob.dt_factor * dx
        )
        l2, linf = fd.error_norms(
            state.u, lambda X: prob.exact(X, t_final), mapping, ops.ref.basis
        )
        reports.append(fd.ErrorReport(
            l2=l2, linf=linf, dx=dx, p=cfg.p, dim=cfg.dim,
            scheme=cfg.form, c=c, flux=cfg.flux,
        ))
    return reports


def report_slopes(reports):
    l2 = fd.ooa([(r.dx, r.l2) for r in reports])
    linf = fd.ooa([(r.dx, r.linf) for r in reports])
    return l2, linf


# --- correction-parameter sweep ---------------------------------------------

def default_sweep_values(ref):
    """0 plus a log-spaced grid reaching far beyond the accuracy collapse."""
    c_lo = abs(fop.estimate_c_minus(ref))
    return [0.0] + list(np.geomspace(1e-3 * c_lo, 1e6 * c_lo, 13))


def c_sweep(cfg, cs=None):
    """Divergence-operator order between one refinement pair as a function
    of c; returns a list of (c, ooa) pairs."""
    pair = cfg.ladder()[:2]
    if len(pair) < 2:
        raise ValueError("c-sweep needs two refinement levels")
    warp = _warp_for_dim(cfg.warp, cfg.dim)
    extent = _warp_extent(warp, cfg.dim)
    levels = []
    for nel in pair:
        mapping, topo = build_mesh(cfg.dim, nel, q=cfg.p, warp=warp)
        ref = fop.build_reference(
            fb.TensorBasis(cfg.p, cfg.dim, "lagrange_gll"),
            volume_rule=gl_rule(cfg.p + 3) if cfg.overint else None,
        )
        levels.append((mapping, topo, ref, node_spacing(extent, nel, cfg.p)))
    if cs is None:
        cs = default_sweep_values(levels[0][2])
    out = []
    for c in cs:
        errs = []
        for mapping, topo, ref, dx in levels:
            l2, _ = _divergence_error_level(mapping, topo, ref, c)
            errs.append((dx, l2))
        out.append((float(c), fd.ooa(errs)[0]))
    return out


# --- metric checks ----------------------------------------------------------

def freestream_check(cfg):
    """Max residual of the constant state per scheme form, plus the
    exact-derivative metric used as a negative control on warped meshes."""
    nel = cfg.elements[0] if cfg.elements else (2 if cfg.dim == 3 else 4)
    c = cfg.c_value()
    a = (1.1, -np.pi / np.e, 0.7)[: cfg.dim]
    mapping, topo, ops = build_system(cfg.dim, cfg.p, nel, warp=cfg.warp, c=c)
    u = np.ones((ops.nel, ops.ref.Np))
    out = {}
    for form in fs.FORMS:
        scheme = fs.SchemeConfig(form, a=a, flux=cfg.flux, c=ops.c)
        out[form] = float(np.max(np.abs(fs.residual(u, ops, scheme))))
    if mapping.warp != "identity":
        met_x = fmet.compute_metrics(
            mapping, volume_nodes=ops.ref.volume_nodes,
            facet_nodes=ops.ref.facet_nodes, form="cross_product",
        )
        ops_x = fop.build_element_operators(
            ops.ref, met_x, topo, c=fop.CorrectionParameter(c)
        )
        scheme = fs.SchemeConfig("esfr_split", a=a, flux=cfg.flux, c=ops_x.c)
        out["esfr_split/exact-derivative-metrics"] = float(
            np.max(np.abs(fs.residual(u, ops_x, scheme)))
        )
    return out


def gcl_check(cfg):
    """Max discrete metric-divergence residual per metric form, with the
    metric magnitude for scale."""
    nel = cfg.elements[0] if cfg.elements else (4 if cfg.dim == 3 else 8)
    ref = fop.build_reference(fb.TensorBasis(cfg.p, cfg.dim, "lagrange_gll"))
    mapping, topo = build_mesh(cfg.dim, nel, q=cfg.p, warp=cfg.warp)
    out = {}
    for form in fmet.FORMS:
        try:
            met = fmet.compute_metrics(
                mapping, volume_nodes=ref.volume_nodes,
                facet_nodes=ref.facet_nodes, form=form,
            )
        except ValueError:
            continue  # exact-derivative forms need a named warp
        resid = fmet.gcl_residual(met, ref)
        out[form] = (float(np.max(np.abs(resid))), float(np.max(np.abs(met.C_vol))))
    return out


# --- CSV emission and config files ------------------------------------------

def write_convergence_csv(path, reports):
    l2s, linfs = report_slopes(reports)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dx", "l2", "l2_ooa", "linf", "linf_ooa"])
        for k, r in enumerate(reports):
            s2 = "" if k == 0 else repr(l2s[k - 1])
            si = "" if k == 0 else repr(linfs[k - 1])
            w.writerow([repr(r.dx), repr(r.l2), s2, repr(r.linf), si])


def write_energy_csv(path, records):
    E0 = records[0].energy
    Q0 = records[0].conserved
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "E", "drift", "Q", "Qdrift"])
        for r in records:
            w.writerow([
                repr(r.t), repr(r.energy), repr(ft._rel_drift(r.energy, E0)),
                repr(r.conserved), repr(ft._rel_drift(r.conserved, Q0)),
            ])


def write_sweep_csv(path, pairs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "ooa"])
        for c, slope in pairs:
            w.writerow([repr(c), repr(slope)])


def read_config_file(path):
    """key = value pairs, '#' comments; returns a flat string dict."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out
