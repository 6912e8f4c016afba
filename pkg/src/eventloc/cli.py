"""Batch front-end: scenario in, tables and verification reports out.

Every subcommand reads one scenario document (packaged name or file path),
runs the corresponding pipeline, prints a one-line summary, and optionally
writes artifacts into an output directory together with a manifest listing
each file's SHA-256.  Runs are deterministic: rerunning a scenario with the
same seed produces byte-identical artifacts, so the manifest carries no
timestamps.

Exit codes: 0 success, 1 numerical check failure, 2 scenario or usage
violation, 3 I/O failure.  The environment variable EVENTLOC_TOL_SCALE
multiplies every verification tolerance (e.g. 10 loosens all checks by one
decade) for runs on unusual hardware.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .engine import TimeRadialGrid, evaluate_field
from .kernels import validate_isometry, validate_subnormalization
from .lorentz import boost_element, oracle_boost_element
from .measures import coordinate_moments, density, probability, tau_matrix
from .scenario import ScenarioError, load_scenario, packaged_scenario_names
from .verify import battery_report, run_battery

_G = "%.17g"


def _fmt(v: float) -> str:
    return _G % v


def _tol_scale() -> float:
    raw = os.environ.get("EVENTLOC_TOL_SCALE", "1.0")
    try:
        s = float(raw)
    except ValueError as exc:
        raise ScenarioError("EVENTLOC_TOL_SCALE", f"not a number: {raw!r}") from exc
    if not s > 0:
        raise ScenarioError("EVENTLOC_TOL_SCALE", "must be positive")
    return s


class _OutDir:
    """Collects artifacts and writes one manifest with content hashes."""

    def __init__(self, path: str | None, scenario_name: str | None):
        self.path = Path(path) if path else None
        self.scenario = scenario_name
        self.artifacts: dict[str, dict] = {}
        if self.path is not None:
            self.path.mkdir(parents=True, exist_ok=True)

    def write_bytes(self, name: str, payload: bytes) -> None:
        if self.path is None:
            return
        (self.path / name).write_bytes(payload)
        self.artifacts[name] = {
            "sha256": hashlib.sha256(payload).hexdigest(),
            "bytes": len(payload),
        }

    def write_json(self, name: str, doc: dict) -> None:
        self.write_bytes(name, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8"))

    def write_csv(self, name: str, header: list[str], rows) -> None:
        if self.path is None:
            return
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
        self.write_bytes(name, buf.getvalue().encode("utf-8"))

    def finish(self, command: str) -> None:
        if self.path is None or not self.artifacts:
            return
        manifest = {
            "command": command,
            "scenario": self.scenario,
            "artifacts": self.artifacts,
        }
        self.write_json("manifest.json", manifest)
        del self.artifacts["manifest.json"]


def _density_rows(rho):
    """(header, row iterator) for the density table of any domain kind."""
    if rho.kind == "grid" and rho.dim == 1:
        t = rho.grid.axes[0]
        return ["t", "rho"], ((float(t[i]), float(rho.values[i])) for i in range(t.size))
    if rho.kind == "grid":
        t, x = rho.grid.axes
        return ["t", "x", "rho"], (
            (float(t[i]), float(x[j]), float(rho.values[i, j]))
            for i in range(t.size)
            for j in range(x.size)
        )
    dom: TimeRadialGrid = rho.radial
    ang0 = rho.angular_integral()
    return ["t", "r", "rho_solid_angle"], (
        (float(dom.t_nodes[i]), float(dom.r_nodes[j]), float(ang0[i, j]))
        for i in range(dom.t_nodes.size)
        for j in range(dom.r_nodes.size)
    )


def _region_clipped(built, region) -> bool:
    if isinstance(built.domain, TimeRadialGrid):
        dom = built.domain
        for lo, hi in zip(region.los, region.his):
            corner = float(np.sqrt(np.sum(np.maximum(np.abs(lo[1:]), np.abs(hi[1:])) ** 2)))
            if lo[0] < dom.t_nodes[0] or hi[0] > dom.t_nodes[-1] or corner > dom.r_max:
                return True
        return False
    for lo, hi in zip(region.los, region.his):
        for a, ax in enumerate(built.domain.axes):
            if lo[a] < ax[0] or hi[a] > ax[-1]:
                return True
    return False


def _build(args):
    scn = load_scenario(args.scenario)
    if args.seed is not None:
        doc = dict(scn.doc)
        doc["seed"] = args.seed
        from .scenario import Scenario

        scn = Scenario.from_dict(doc)
    return scn.build()


def _cmd_validate_kernel(args) -> int:
    built = _build(args)
    if built.kernel.mode == "normalized":
        rep = validate_isometry(built.kernel, tol=1e-10 * _tol_scale())
        figure = f"max|G-I|={rep.worst_value:.3g}"
    else:
        rep = validate_subnormalization(built.kernel, tol=1e-10 * _tol_scale())
        figure = f"lambda_max={max(rep.node_values):.6g}"
    status = "PASS" if rep.passed else "FAIL"
    print(f"{status} {figure}  ({built.name}, {built.kernel.mode})")
    out = _OutDir(args.out, built.name)
    out.write_json("gram.json", rep.as_dict())
    out.finish("validate-kernel")
    return 0 if rep.passed else 1


def _cmd_density(args) -> int:
    built = _build(args)
    rho = density(evaluate_field(built.state, built.kernel, built.domain))
    total = rho.total()
    header, rows = _density_rows(rho)
    out = _OutDir(args.out, built.name)
    out.write_csv("density.csv", header, rows)
    out.finish("density")
    print(f"density over {built.name} domain: total probability {total:.12f}")
    return 0


def _cmd_probability(args) -> int:
    built = _build(args)
    if not built.regions:
        raise ScenarioError("outputs.probability_regions", "scenario requests no regions")
    rho = density(evaluate_field(built.state, built.kernel, built.domain))
    entries = []
    for i, region in enumerate(built.regions):
        clipped = _region_clipped(built, region)
        if clipped:
            print(f"warning: region {i} extends beyond the evaluation domain; result is clipped",
                  file=sys.stderr)
        with warnings.catch_warnings():
            # the library raises its own clip warning; the stderr line above
            # already covers it for CLI users
            warnings.filterwarnings("ignore", message=".*clipped.*", category=UserWarning)
            p = probability(rho, region)
        entries.append({
            "lo": [float(v) for v in region.los[0]],
            "hi": [float(v) for v in region.his[0]],
            "probability": p,
            "clipped": clipped,
        })
        print(f"region {i}: probability {p:.12f}")
    out = _OutDir(args.out, built.name)
    out.write_json("probabilities.json", {"scenario": built.name, "regions": entries})
    out.finish("probability")
    return 0


def _cmd_moments(args) -> int:
    built = _build(args)
    rep = coordinate_moments(density(evaluate_field(built.state, built.kernel, built.domain)))
    out = _OutDir(args.out, built.name)
    out.write_json("moments.json", rep.as_dict())
    out.finish("moments")
    mean = ", ".join(f"{v:.6f}" for v in rep.mean)
    print(f"moments for {built.name}: total {rep.total:.9f}, mean ({mean})")
    return 0


def _cmd_tau_matrix(args) -> int:
    built = _build(args)
    if built.tau_basis is None:
        raise ScenarioError("outputs.tau_matrix", "scenario requests no region-operator block")
    res = tau_matrix(built.kernel, built.tau_region, built.tau_basis, built.domain)
    out = _OutDir(args.out, built.name)
    out.write_json("tau.json", res.as_dict())
    out.finish("tau-matrix")
    eigs = res.eigenvalues
    print(f"tau block for {built.name}: {len(eigs)} eigenvalues in [{eigs.min():.6f}, {eigs.max():.6f}]")
    return 0


def _cmd_verify_suite(args) -> int:
    scale = _tol_scale()
    scenarios = [args.scenario] if args.scenario else None
    results = run_battery(scenarios, threads=args.threads, tol_scale=scale)
    for r in results:
        print(r.summary())
    rep = battery_report(results, tol_scale=scale)
    out = _OutDir(args.out, args.scenario or "reference-set")
    out.write_json("verify.json", rep)
    out.finish("verify-suite")
    n_fail = rep["n_failed"]
    print(f"{rep['n_checks'] - n_fail}/{rep['n_checks']} checks passed")
    return 0 if rep["passed"] else 1


def _cmd_dmatrix_table(args) -> int:
    zetas = np.linspace(-args.zeta_max, args.zeta_max, args.n_zeta)
    rows = []
    worst = 0.0
    for q in args.q:
        c = 1j * q
        for l in range(args.l_max + 1):
            for z in zetas:
                val = boost_element(c, l, float(z))
                ref = oracle_boost_element(c, l, 0, float(z))
                resid = abs(val - ref)
                worst = max(worst, resid)
                rows.append((float(q), l, float(z), val.real, val.imag, resid))
    out = _OutDir(args.out, None)
    out.write_csv("dmatrix.csv", ["q", "l", "zeta", "re_d", "im_d", "oracle_residual"], rows)
    out.finish("dmatrix-table")
    print(f"boost elements: l<={args.l_max}, {len(rows)} entries, max oracle residual {worst:.3e}")
    return 0


def _cmd_run(args) -> int:
    built = _build(args)
    outputs = built.outputs
    out = _OutDir(args.out, built.name)
    field = evaluate_field(built.state, built.kernel, built.domain)
    rho = density(field)

    if outputs.get("density", False):
        header, rows = _density_rows(rho)
        out.write_csv("density.csv", header, rows)
    if outputs.get("moments", False):
        out.write_json("moments.json", coordinate_moments(rho).as_dict())
    if built.regions:
        entries = []
        for i, region in enumerate(built.regions):
            clipped = _region_clipped(built, region)
            if clipped:
                print(f"warning: region {i} extends beyond the evaluation domain; result is clipped",
                      file=sys.stderr)
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message=".*clipped.*", category=UserWarning)
                p = probability(rho, region)
            entries.append({
                "lo": [float(v) for v in region.los[0]],
                "hi": [float(v) for v in region.his[0]],
                "probability": p,
                "clipped": clipped,
            })
        out.write_json("probabilities.json", {"scenario": built.name, "regions": entries})
    if built.tau_basis is not None:
        res = tau_matrix(built.kernel, built.tau_region, built.tau_basis, built.domain)
        out.write_json("tau.json", res.as_dict())

    verify_failed = False
    if outputs.get("verify", False):
        scale = _tol_scale()
        results = run_battery([built], threads=args.threads, tol_scale=scale)
        rep = battery_report(results, tol_scale=scale)
        out.write_json("verify.json", rep)
        verify_failed = not rep["passed"]
        for r in results:
            print(r.summary())

    out.finish("run")
    n = len(out.artifacts) + (1 if out.path else 0)
    where = f" -> {out.path}" if out.path else ""
    print(f"run {built.name}: total probability {rho.total():.12f}, {n} artifacts{where}")
    return 1 if verify_failed else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eventloc",
        description="Covariant event-localization measures: densities, probabilities, "
        "moments, region operators, and the verification battery.",
        epilog="EVENTLOC_TOL_SCALE multiplies all verification tolerances. "
        f"Packaged scenarios: {', '.join(packaged_scenario_names())}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, scenario=True, out=True, threads=False, seed=True):
        p = sub.add_parser(name, help=help_)
        if scenario:
            p.add_argument("--scenario", required=(name != "verify-suite"),
                           help="packaged scenario name or path to a scenario JSON file")
        if out:
            p.add_argument("--out", help="directory for artifacts and the manifest")
        if threads:
            p.add_argument("--threads", type=int, default=1,
                           help="run independent checks on this many threads")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the scenario seed")
        p.set_defaults(func=func)
        return p

    add("validate-kernel", _cmd_validate_kernel, "check the kernel Gram condition")
    add("density", _cmd_density, "evaluate the event density over the scenario domain")
    add("probability", _cmd_probability, "integrate the density over the scenario regions")
    add("moments", _cmd_moments, "first and second coordinate moments of the density")
    add("tau-matrix", _cmd_tau_matrix, "Galerkin block of the region operator")
    add("verify-suite", _cmd_verify_suite, "run the verification battery",
        threads=True, seed=False)

    p = sub.add_parser("dmatrix-table", help="table of boost matrix elements with oracle residuals")
    p.add_argument("--l-max", type=int, default=4)
    p.add_argument("--zeta-max", type=float, default=3.0)
    p.add_argument("--n-zeta", type=int, default=13)
    p.add_argument("--q", type=float, nargs="+", default=[0.5, 1.0, 2.0],
                   help="imaginary parts of the series parameter c = iq")
    p.add_argument("--out", help="directory for artifacts and the manifest")
    p.set_defaults(func=_cmd_dmatrix_table)

    add("run", _cmd_run, "produce every artifact the scenario requests", threads=True)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
