"""Command-line surface.

Every command exits 0 on success, 1 on a domain failure (with the error as
one JSON object on stderr), 2 on usage errors.  All randomness comes from
explicit --seed flags; nothing reads the clock.  Input files are looked up
in --session/--data directories, defaulting to $ONIT_DATA_DIR.
"""

from __future__ import annotations

import json
import os
import sys
from fractions import Fraction
from functools import wraps
from pathlib import Path

import click

from . import engine as eng
from . import formats, simulate, transcript as transcript_mod
from .election import CardRecord, NO_VOTE, verify_accounting
from .errors import AuditError
from .onecvr import build_one_layout

CONTEST_FILE = "contest.json"
MANIFEST_FILE = "manifest.csv"
SUBTOTALS_FILE = "subtotals.csv"
CVRS_FILE = "cvrs.jsonl"
TRANSCRIPT_FILE = "transcript.jsonl"

BUILTIN_SCENARIOS = {
    "contrived-900": lambda: simulate.Scenario.contrived(900),
    "contrived-990": lambda: simulate.Scenario.contrived(990),
    "pure-clca": simulate.Scenario.pure_clca,
}


def _fail(err: AuditError) -> None:
    click.echo(json.dumps(err.to_json(), sort_keys=True), err=True)
    sys.exit(1)


def domain_errors(fn):
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except AuditError as exc:
            _fail(exc)
    return wrapper


def _data_dir(option: str | None) -> Path:
    root = option or os.environ.get("ONIT_DATA_DIR") or "."
    return Path(root)


def _load_inputs(directory: Path):
    def read(name, default=None):
        path = directory / name
        if not path.exists():
            if default is not None:
                return default
            raise AuditError("MISSING_INPUT", f"{name} not found in {directory}", file=name)
        return path.read_text(encoding="utf-8")
    contest, results = formats.load_results(
        read(CONTEST_FILE), read(CVRS_FILE, ""), read(SUBTOTALS_FILE, ""))
    manifest = formats.parse_manifest(read(MANIFEST_FILE))
    return contest, results, manifest


def _load_session(directory: Path) -> eng.AuditSession:
    contest, results, manifest = _load_inputs(directory)
    path = directory / TRANSCRIPT_FILE
    if not path.exists():
        raise AuditError("WRONG_STATE", "no transcript: draw with --seed to start a session",
                         expected="RUNNING", actual="SETUP")
    tr = transcript_mod.load(path)
    return eng.replay(contest, results, manifest, tr)


def _save_session(directory: Path, session: eng.AuditSession) -> None:
    session.transcript.write(directory / TRANSCRIPT_FILE)


@click.group()
def main():
    """Risk-limiting audit engine with synthetic comparison records."""


@main.command()
@click.option("--data", type=click.Path(), default=None,
              help="Directory with contest.json, manifest.csv, subtotals.csv, cvrs.jsonl.")
@domain_errors
def verify(data):
    """Check card counts, tallies and the reported winner; exit 0 only on PASS."""
    contest, results, manifest = _load_inputs(_data_dir(data))
    report = verify_accounting(results, manifest, contest)
    payload = {
        "pass": report.passed,
        "card_counts_ok": report.card_counts_ok,
        "tallies_ok": report.tallies_ok,
        "winner_ok": report.winner_ok,
        "findings": [{"code": f.code, "message": f.message, "subject": f.subject}
                     for f in report.findings],
    }
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    if not report.passed:
        sys.exit(1)


@main.command("build-one")
@click.option("--data", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None, help="Write layout JSON here.")
@domain_errors
def build_one(data, out):
    """Emit the synthetic comparison layout (per-group mean assorter values)."""
    contest, results, manifest = _load_inputs(_data_dir(data))
    from .assorters import make_assertions
    layouts = {}
    for assertion in make_assertions(contest, results):
        layout = build_one_layout(assertion, results, manifest)
        layouts[assertion.id] = {
            "margin": str(assertion.margin),
            "reported_mean": str(assertion.reported_mean),
            "group_means": {g: str(m) for g, m in sorted(layout.group_means.items())},
            "group_sizes": dict(sorted(layout.group_sizes.items())),
            "linked_cards": len(layout.linked),
        }
    text = json.dumps(layouts, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


@main.command()
@click.option("--data", type=click.Path(), default=None)
@click.option("--seed", default="plan")
@click.option("--method", type=click.Choice(["alpha", "sprt"]), default="alpha")
@click.option("--error-rate", type=float, default=0.0)
@click.option("--reps", type=int, default=200)
@domain_errors
def plan(data, seed, method, error_rate, reps):
    """Monte Carlo sample-size estimate assuming hand reads match reports."""
    contest, results, manifest = _load_inputs(_data_dir(data))
    session = eng.open_session(contest, results, manifest, seed,
                               eng.MethodConfig(method=method))
    sizes = simulate.plan_stopping_sizes(session, error_rate=error_rate,
                                         reps=reps, seed=seed)
    sizes.sort()
    q90 = sizes[min(len(sizes) - 1, int(0.9 * len(sizes)))]
    click.echo(json.dumps({
        "quantile_90": int(q90),
        "mean": sum(sizes) / len(sizes),
        "median": int(sizes[len(sizes) // 2]),
        "reps": reps,
        "error_rate": error_rate,
    }, sort_keys=True))


@main.command()
@click.option("--session", "session_dir", type=click.Path(), default=None)
@click.option("--count", type=int, default=1)
@click.option("--seed", default=None,
              help="Starts a session on first use; forbidden afterwards.")
@click.option("--method", type=click.Choice(["alpha", "sprt"]), default="alpha")
@domain_errors
def draw(session_dir, count, seed, method):
    """Select the next card(s) to retrieve; prints one instruction per line."""
    directory = _data_dir(session_dir)
    path = directory / TRANSCRIPT_FILE
    if path.exists():
        if seed is not None:
            raise AuditError("WRONG_STATE", "session already started; drop --seed",
                             expected="RUNNING", actual="RUNNING")
        session = _load_session(directory)
    else:
        if seed is None:
            raise AuditError("WRONG_STATE", "no session yet; provide --seed",
                             expected="SETUP", actual="SETUP")
        contest, results, manifest = _load_inputs(directory)
        session = eng.open_session(contest, results, manifest, seed,
                                   eng.MethodConfig(method=method))
    for _ in range(count):
        instruction = eng.draw_next(session)
        click.echo(json.dumps(instruction.to_payload(), sort_keys=True))
    _save_session(directory, session)


@main.command()
@click.option("--session", "session_dir", type=click.Path(), default=None)
@click.option("--ordinal", type=int, required=True)
@click.option("--mvr", required=True,
              help="Candidate id, empty string for no vote, or a JSON votes object.")
@domain_errors
def record(session_dir, ordinal, mvr):
    """Record the hand read of a drawn card and update measured risks."""
    directory = _data_dir(session_dir)
    session = _load_session(directory)
    votes = _parse_mvr_option(mvr, session.contest.id)
    results = eng.record_mvr(session, ordinal, CardRecord(f"mvr-{ordinal}", votes))
    _save_session(directory, session)
    click.echo(json.dumps({
        "ordinal": ordinal,
        "status": session.status,
        "assertions": [{"assertion": aid, "comparison_value": str(x),
                        "measured_risk": repr(risk)} for aid, x, risk in results],
    }, sort_keys=True))


def _parse_mvr_option(raw: str, contest_id: str) -> dict:
    if raw.startswith("{"):
        try:
            return {str(k): str(v) for k, v in json.loads(raw).items()}
        except json.JSONDecodeError:
            raise AuditError("BAD_FIELD", "--mvr JSON is invalid")
    if raw == NO_VOTE:
        return {}
    return {contest_id: raw}


@main.command()
@click.option("--session", "session_dir", type=click.Path(), default=None)
@domain_errors
def risk(session_dir):
    """Per-assertion measured risks for the session as it stands."""
    session = _load_session(_data_dir(session_dir))
    click.echo(json.dumps({
        "status": session.status,
        "risk_limit": str(session.risk_limit),
        "cards_recorded": len(session.recorded),
        "risks": {aid: repr(r) for aid, r in sorted(session.measured_risks().items())},
    }, indent=2, sort_keys=True))


@main.command()
@click.option("--session", "session_dir", type=click.Path(), default=None)
@domain_errors
def replay(session_dir):
    """Re-derive the whole session from inputs + transcript; fails on any divergence."""
    directory = _data_dir(session_dir)
    session = _load_session(directory)   # raises CHAIN_BROKEN / DIVERGENCE
    click.echo(json.dumps({"replayed_events": len(session.transcript),
                           "status": session.status}, sort_keys=True))


@main.command("simulate")
@click.option("--scenario", required=True,
              help="Builtin name (contrived-900, contrived-990, pure-clca) or JSON file.")
@click.option("--method", type=click.Choice(["one_clca", "bpa", "clca", "km_blca"]),
              required=True)
@click.option("--alpha", type=float, default=0.05)
@click.option("--reps", type=int, default=200)
@click.option("--seed", default="sim")
@domain_errors
def simulate_cmd(scenario, method, alpha, reps, seed):
    """Expected-workload Monte Carlo for one scenario and method."""
    sc = _load_scenario(scenario)
    stats = simulate.run_expected_sample_size(sc, method, alpha=alpha, reps=reps,
                                              seed=seed)
    click.echo(json.dumps({
        "scenario": stats.scenario, "method": stats.method,
        "mean": stats.mean, "sd": stats.sd, "quantiles": stats.quantiles,
        "reps": stats.reps, "confirmed": stats.confirmed, "notes": stats.notes,
    }, indent=2, sort_keys=True))


def _load_scenario(spec: str) -> simulate.Scenario:
    if spec in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[spec]()
    path = Path(spec)
    if not path.exists():
        raise AuditError("BAD_FIELD", f"unknown scenario {spec}", scenario=spec)
    obj = json.loads(path.read_text(encoding="utf-8"))
    groups = tuple(simulate.GroupBlock(**g) for g in obj.get("groups", []))
    true_groups = tuple(simulate.GroupBlock(**g) for g in obj["true_groups"]) \
        if obj.get("true_groups") else None
    return simulate.Scenario(
        name=obj.get("name", path.stem),
        linked=tuple(obj.get("linked", (0, 0, 0))),
        groups=groups,
        risk_limit=Fraction(str(obj.get("risk_limit", "1/20"))),
        true_linked=tuple(obj["true_linked"]) if obj.get("true_linked") else None,
        true_groups=true_groups,
    )


@main.command()
@click.option("--permutations", type=int, default=10_000)
@click.option("--seed", default="kalamazoo")
@domain_errors
def kalamazoo(permutations, seed):
    """Permutation study of the 2018 Kalamazoo pilot sample."""
    result = simulate.run_kalamazoo(permutations=permutations, seed=seed)
    click.echo(json.dumps({
        "mean_p": result.mean_p, "sd_p": result.sd_p, "q90_p": result.q90_p,
        "permutations": result.permutations, "margin": result.margin,
        "notes": result.notes,
    }, indent=2, sort_keys=True))


@main.command()
@click.option("--theta", "thetas", type=float, multiple=True, required=True)
@click.option("--blank", "blanks", type=float, multiple=True, required=True)
@click.option("--n", "ns", type=int, multiple=True, required=True)
@click.option("--eta", "etas", type=float, multiple=True, required=True)
@click.option("--d", "ds", multiple=True, default=("10",),
              help="Shrinkage weights; 'inf' for a fixed alternative.")
@click.option("--reps", type=int, default=1000)
@click.option("--alpha", type=float, default=0.05)
@click.option("--seed", default="grid")
@click.option("--out", type=click.Path(), default=None, help="CSV destination.")
@domain_errors
def grid(thetas, blanks, ns, etas, ds, reps, alpha, seed, out):
    """Mean stopping sizes for raw vs transformed streams over a condition grid."""
    configs = []
    for eta in etas:
        for d in ds:
            dd = None if d == "inf" else int(d)
            configs.append(simulate.GridConfig("alpha_raw", eta, dd))
            configs.append(simulate.GridConfig("alpha_one", eta, dd))
    cells = simulate.run_grid(thetas, blanks, ns, configs, reps=reps,
                              alpha=alpha, seed=seed)
    lines = ["theta,blank_frac,n,config,mean_size,sd_size,reps"]
    for c in cells:
        lines.append(f"{c.theta},{c.blank_frac},{c.n},{c.config},"
                     f"{c.mean_size},{c.sd_size},{c.reps}")
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
def serve(port, host):
    """Run the HTTP facade for live data entry."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
