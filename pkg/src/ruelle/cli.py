"""Command-line frontend: ``ruelle <command> --config run.json [--out DIR] [--format json|csv|both]``.

Exit codes: 0 success, 1 unsatisfied report under ``--strict``, 2 configuration
error, 3 computation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import shift as sh
from . import suite
from . import zeta as zt
from .config import RunConfig, load_config
from .errors import ConfigError, HypothesisViolated, RuelleError
from .potential import GeometricPotential, TabulatedFunction, ThetaProfile, project_Em
from .transfer import build_matrix, pressure, spectrum


def plain(x):
    """Recursively convert numpy scalars, complex numbers and non-finite floats to JSON-safe values."""
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [plain(float(x.real)), plain(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _cell(v) -> str:
    v = plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return json.dumps(v)
    return str(v)


class Output:
    """Collects result files and writes them atomically once the command has finished."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.files: dict[str, str] = {}

    def json(self, name: str, doc) -> None:
        if "json" in self.cfg.formats:
            self.files[f"{name}.json"] = json.dumps(plain(doc), sort_keys=True, indent=2) + "\n"

    def table(self, name: str, header: list, rows, always: bool = False) -> None:
        if always or "csv" in self.cfg.formats:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
            self.files[f"{name}.csv"] = buf.getvalue()

    def text(self, name: str, content: str) -> None:
        self.files[name] = content

    def flush(self) -> list:
        out_dir = self.cfg.output_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, content in sorted(self.files.items()):
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w") as fh:
                fh.write(content)
            os.replace(tmp, out_dir / name)
            written.append(str(out_dir / name))
        return written


def _spectral_tols(cfg):
    return dict(cluster_tol=cfg.tolerances["cluster"], rtol=cfg.tolerances["eigensolve"],
                cap=int(cfg.caps["dense"]))


def _project(cfg: RunConfig, m: int) -> TabulatedFunction:
    return project_Em(cfg.potential, cfg.shift, m, cfg.measure, m + cfg.quadrature_depth_extra)


def cmd_entropy(cfg: RunConfig, out: Output) -> dict:
    lam = cfg.shift.perron[0]
    doc = {"n": cfg.shift.n, "perron_root": lam, "h_top": sh.topological_entropy(cfg.shift),
           "aperiodicity_exponent": cfg.shift.aperiodicity_exponent}
    out.json("entropy", doc)
    out.table("entropy", ["quantity", "value"], sorted(doc.items()))
    return doc


def cmd_words(cfg: RunConfig, out: Output) -> dict:
    n = cfg.shift.n
    entries, rows = [], []
    for m in cfg.schedule.m:
        words = sh.enumerate_words(cfg.shift, m, int(cfg.caps["words"]))
        text = [sh.format_word(w, n) for w in words]
        entries.append({"m": m, "count": len(text), "words": text})
        rows.extend((m, i, t) for i, t in enumerate(text))
    doc = {"words": entries}
    out.json("words", doc)
    out.table("words", ["m", "index", "word"], rows)
    return doc


def cmd_orbits(cfg: RunConfig, out: Output) -> dict:
    n = cfg.shift.n
    Qmax = max(cfg.schedule.q)
    Z, err = zt.orbit_sums(cfg.potential, cfg.shift, Qmax, cfg.tolerances["birkhoff"], int(cfg.caps["words"]))
    A = cfg.shift.matrix.astype(object)
    entries, rows = [], []
    for q in cfg.schedule.q:
        pts = sh.periodic_words(cfg.shift, q, int(cfg.caps["words"]))
        trace = int(np.trace(np.linalg.matrix_power(A, q)))
        entry = {"q": q, "count": int(pts.shape[0]), "trace": trace, "Z_q": Z[q - 1], "error": err[q - 1]}
        if pts.shape[0] <= 4096:
            entry["points"] = [sh.format_word(w, n) for w in pts]
        entries.append(entry)
        rows.append((q, entry["count"], trace, Z[q - 1].real, Z[q - 1].imag, err[q - 1]))
    doc = {"orbits": entries}
    out.json("orbits", doc)
    out.table("orbits", ["q", "count", "trace", "Z_re", "Z_im", "error"], rows)
    return doc


def cmd_spectrum(cfg: RunConfig, out: Output) -> dict:
    entries, rows = [], []
    for m in cfg.schedule.m:
        spec = spectrum(build_matrix(_project(cfg, m), cap=int(cfg.caps["dense"])), **_spectral_tols(cfg))
        entries.append({"m": m, **spec.to_json()})
        rows.extend((m, i, z.real, z.imag, k)
                    for i, (z, k) in enumerate(zip(spec.eigenvalues, spec.multiplicities)))
    doc = {"spectra": entries}
    out.json("spectrum", doc)
    out.table("spectrum", ["m", "index", "re", "im", "multiplicity"], rows)
    return doc


def cmd_pressure(cfg: RunConfig, out: Output) -> dict:
    if not cfg.potential.is_real:
        raise ConfigError("pressure needs a real-valued potential")
    entries = []
    for m in cfg.schedule.m:
        res = pressure(cfg.potential, cfg.shift, m, cfg.measure, m + cfg.quadrature_depth_extra)
        entries.append(res.as_dict())
    doc = {"h_top": sh.topological_entropy(cfg.shift), "pressure": entries}
    out.json("pressure", doc)
    out.table("pressure", ["m", "pressure", "lower", "upper"],
              [(e["m"], e["pressure"], e["lower"], e["upper"]) for e in entries])
    return doc


def _z_grid(cfg: RunConfig, lead: float) -> np.ndarray:
    rng = np.random.default_rng(cfg.schedule.seed)
    k = cfg.schedule.z_count
    radius = cfg.schedule.z_radius / max(lead, 1e-300)
    return radius * np.sqrt(rng.random(k)) * np.exp(2j * np.pi * rng.random(k))


def _locally_constant_at(cfg: RunConfig, m: int) -> bool:
    f = cfg.potential
    return isinstance(f, TabulatedFunction) and f.depth <= m or f.var_bound(m) == 0


def cmd_zeta(cfg: RunConfig, out: Output) -> dict:
    Q = cfg.schedule.Q
    m = max(cfg.schedule.m)
    tol = cfg.tolerances["birkhoff"]
    k0 = cfg.schedule.k0
    if k0 is None:
        r = cfg.potential.r if isinstance(cfg.potential, GeometricPotential) else 0.5
        k0 = zt.k0_bound(r, sh.topological_entropy(cfg.shift))[0]
    series = zt.zeta_series(cfg.potential, cfg.shift, Q, tol)
    tm = build_matrix(_project(cfg, m), cap=int(cfg.caps["dense"]))
    det = zt.zeta_coeffs_from_determinant(tm, Q)
    spec = spectrum(tm, **_spectral_tols(cfg))
    lams = spec.expanded()
    prod = zt.zeta_coeffs_from_orbits([np.sum(lams ** q) for q in range(1, Q + 1)])
    deltas = {"orbit_vs_determinant": float(np.abs(series.coeffs - det).max()),
              "orbit_vs_product": float(np.abs(series.coeffs - prod).max()),
              "determinant_vs_product": float(np.abs(det - prod).max())}
    zs = _z_grid(cfg, abs(spec.leading))
    rows_eval, _, _ = zt.product_series_comparison(cfg.potential, cfg.shift, m, Q, zs, k0, cfg.measure,
                                                   m + cfg.quadrature_depth_extra, tol)
    doc = {"Q": Q, "m": m, "k0": k0, "locally_constant": _locally_constant_at(cfg, m),
           "coefficients": {"orbit-series": series.coeffs, "determinant": det, "product": prod},
           "orbit_sums": series.orbit_sums, "deltas": deltas,
           "evaluations": [r.as_dict() for r in rows_eval]}
    out.table("zeta_coefficients", ["k", "orbit_re", "orbit_im", "det_re", "det_im", "prod_re", "prod_im"],
              [(k, a.real, a.imag, b.real, b.imag, c.real, c.imag)
               for k, (a, b, c) in enumerate(zip(series.coeffs, det, prod))])
    out.table("zeta_evaluations", ["z_re", "z_im", "product_re", "product_im", "series_re", "series_im",
                                   "delta", "product_remainder", "series_remainder", "agrees"],
              [(r.z.real, r.z.imag, r.product.real, r.product.imag, r.series.real, r.series.imag,
                r.delta, r.product_remainder, r.series_remainder, r.agrees) for r in rows_eval])
    if not doc["locally_constant"]:
        doc["defects"] = _trace_checks(cfg, out)
    out.json("zeta", doc)
    return doc


def _trace_checks(cfg: RunConfig, out: Output) -> list:
    checks, rows = [], []
    for q in cfg.schedule.q:
        tc = zt.trace_formula_check(cfg.potential, cfg.shift, q, cfg.schedule.m, cfg.measure,
                                    None, cfg.tolerances["birkhoff"])
        checks.append(tc.as_dict())
        plot = [(m, d) for m, d in zip(tc.m_values, tc.defects)]
        out.table(f"plot_trace_q{q}", ["m", "delta"], plot, always=True)
        rows.extend((q, m, s.real, s.imag, d) for m, s, d in zip(tc.m_values, tc.sums, tc.defects))
    out.table("trace_defects", ["q", "m", "power_sum_re", "power_sum_im", "delta"], rows)
    return checks


def cmd_trace_check(cfg: RunConfig, out: Output) -> dict:
    doc = {"checks": _trace_checks(cfg, out)}
    out.json("trace_check", doc)
    return doc


def _verify_theta(cfg: RunConfig) -> ThetaProfile:
    spec = cfg.verify.get("theta")
    if spec is None:
        return suite.default_theta(cfg.potential)
    try:
        return ThetaProfile.from_geometric(float(spec["D"]), float(spec["r"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"verify.theta needs positive D and r in (0,1): {exc}") from exc


def verify_reports(cfg: RunConfig) -> tuple:
    v = cfg.verify
    shift, f, mu = cfg.shift, cfg.potential, cfg.measure
    rng = np.random.default_rng(int(v.get("seed", cfg.schedule.seed)))
    samples = int(v.get("samples", 20))
    theta = _verify_theta(cfg)
    h = sh.topological_entropy(shift)
    R = float(v.get("R", 1.25 * math.exp(h)))
    alpha = float(v.get("alpha", 1.0))
    overrides = v.get("overrides")
    m_values = cfg.schedule.m
    notes = []

    reports, c = suite.remainder_suite(shift, f, theta, samples, rng, [m for m in m_values if m >= 1] or [1],
                                       mu=mu, overrides=overrides)
    reports = suite.constant_reports(c) + reports
    reports += suite.lasota_yorke_suite(shift, samples, rng, f=f)
    reports += suite.lasota_yorke_suite(shift, samples, rng)
    emb = v.get("embedding", {})
    theta_p = float(emb.get("theta_prime", 0.5))
    theta_e = float(emb.get("theta", theta_p / (shift.n + 1)))
    reports += suite.projection_suite(shift, samples, rng, theta_e, theta_p, mu=mu)
    reports += suite.embedding_suite(shift, samples, rng, theta_e, theta_p)

    count_ms = []
    for m in m_values:
        if m >= 1 and 0 < theta(m) <= 1 and sh.word_count(shift, m - 1) <= R ** (m - 1):
            count_ms.append(m)
        else:
            notes.append(f"counting bound skipped at m = {m}: below its threshold")
    if count_ms:
        counts, C_alpha = suite.counting_suite(shift, f, theta, alpha, R, count_ms,
                                               int(v.get("spectral_depth", max(count_ms) + 2)),
                                               v.get("C_alpha"), mu, overrides)
        reports += counts
        notes.append(f"C_alpha = {C_alpha!r}")
    if c.C4 is not None:
        reports += suite.rank_suite(shift, c, R, cfg.schedule.q, m_values)
    reports += suite.cohomology_suite(shift, f, [m for m in range(1, 5)], rng,
                                      cfg.tolerances["birkhoff"])
    return reports, notes


def cmd_verify(cfg: RunConfig, out: Output) -> dict:
    reports, notes = verify_reports(cfg)
    lines = [r.to_json() for r in reports]
    for line in lines:
        print(line)
    if "json" in cfg.formats:
        out.text("reports.jsonl", "".join(line + "\n" for line in lines))
    out.table("reports", ["name", "kind", "measured", "bound", "satisfied", "parameters"],
              [(r.name, r.kind, r.measured, r.bound, r.satisfied, json.dumps(plain(r.parameters), sort_keys=True))
               for r in reports])
    summary = suite.summarize(reports)
    summary["notes"] = notes
    out.json("verify_summary", summary)
    return {"summary": summary, "reports": reports}


def cmd_cohomology(cfg: RunConfig, out: Output) -> dict:
    shift = cfg.shift
    tol = cfg.tolerances["birkhoff"]
    wit = dg.cohomology_witness(shift)
    entries, rows = [], []
    for m in cfg.schedule.m:
        if m < 1:
            continue
        base = dg.cohomology_defect(cfg.potential, shift, m, tol, wit)
        shifted = {}
        for n in (1, 2, 4):
            d = dg.cohomology_defect(cfg.potential + dg.perturbation(shift, m, n, wit), shift, m, tol, wit)
            shifted[str(n)] = d
            rows.append((m, n, base.real, base.imag, d.real, d.imag))
        entries.append({"m": m, "defect": base, "perturbed": shifted})
    doc = {"witness": wit.to_json(shift.n), "defects": entries}
    out.json("cohomology", doc)
    out.table("cohomology", ["m", "n", "defect_re", "defect_im", "perturbed_re", "perturbed_im"], rows)
    return doc


COMMANDS = {
    "entropy": cmd_entropy,
    "words": cmd_words,
    "orbits": cmd_orbits,
    "spectrum": cmd_spectrum,
    "pressure": cmd_pressure,
    "zeta": cmd_zeta,
    "trace-check": cmd_trace_check,
    "verify": cmd_verify,
    "cohomology": cmd_cohomology,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ruelle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--format", choices=["json", "csv", "both"], help="output formats")
        p.add_argument("--strict", action="store_true", help="exit 1 when any bound report is unsatisfied")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.out, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RuelleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    out = Output(cfg)
    try:
        result = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuelleError, np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    out.flush()
    if args.command == "verify":
        summary = result["summary"]
        print(f"{summary['total']} reports, {summary['violations']} unsatisfied", file=sys.stderr)
        if args.strict and summary["violations"]:
            return 1
    else:
        print(json.dumps(plain(result), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
