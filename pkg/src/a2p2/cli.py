"""Command-line entry points: kg validate, serve, simulate, cohort, eval."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import ckg, dialog, empathy, evalstats, nlg, nlu, patientsim, reporting
from .errors import A2P2Error
from .session import Runtime, SessionService


def build_runtime(args: argparse.Namespace) -> Runtime:
    if getattr(args, "kg", None):
        graph = ckg.load_graph(Path(args.kg).read_bytes())
    else:
        graph = ckg.load_shipped_graph()
    if getattr(args, "responses", None):
        from importlib import resources

        config = empathy.load_scorer_config(
            resources.files("a2p2.data").joinpath("scorer_config.json").read_bytes()
        )
        bank = empathy.load_bank(Path(args.responses).read_bytes(), config, set(graph.symptoms))
    else:
        bank = empathy.load_shipped_bank(set(graph.symptoms))
    if getattr(args, "policy", None):
        policies = {1: dialog.load_policy(Path(args.policy).read_bytes()), 2: dialog.load_shipped_policy(2)}
    else:
        policies = {1: dialog.load_shipped_policy(1), 2: dialog.load_shipped_policy(2)}
    return Runtime(
        graph=graph,
        bank=bank,
        templates=nlg.load_shipped_templates(),
        emotion_lexicon=nlu.load_emotion_lexicon(),
        policies=policies,
    )


def cmd_kg_validate(args: argparse.Namespace) -> int:
    document = Path(args.file).read_bytes() if args.file else None
    try:
        graph = ckg.load_graph(document) if document is not None else ckg.load_shipped_graph()
    except A2P2Error as exc:
        print(f"invalid: {exc}")
        return 1
    stats = graph.stats()
    print("valid knowledge graph")
    for key in ("symptoms", "goals", "solutions", "resources", "symptom_goal_edges", "goal_solution_edges"):
        print(f"  {key}: {stats[key]}")
    print("  resources per solution: 1")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .session.api import create_app

    runtime = build_runtime(args)
    service = SessionService(runtime, data_dir=args.data_dir)
    console_html = Path(args.console).read_text() if args.console else None
    app = create_app(service, console_html=console_html)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _load_scenario(source: str, runtime: Runtime) -> patientsim.Scenario:
    path = Path(source)
    if path.exists():
        return patientsim.load_scenario(path.read_bytes(), runtime)
    return patientsim.shipped_scenario(source, runtime)


def cmd_simulate(args: argparse.Namespace) -> int:
    runtime = build_runtime(args)
    scenario = _load_scenario(args.scenario, runtime)
    if args.endpoint:
        endpoint = patientsim.HttpEndpoint(args.endpoint, timeout=args.timeout)
    else:
        endpoint = patientsim.InProcessEndpoint(SessionService(runtime))
    record = patientsim.drive(
        scenario, endpoint, args.condition, args.seed, patience=args.patience
    )
    transcript = patientsim.transcript_from_record(record, scenario, args.participant)
    report = patientsim.score(record, scenario)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(transcript, indent=2, sort_keys=True) + "\n")
        print(f"transcript written to {args.out}")
    print(
        f"scenario={scenario.id} condition={args.condition} seed={args.seed} "
        f"empathic_correct={report.empathic_correct}/2 goal_correct={report.goal_correct}/2 "
        f"symptom_identified={report.symptom_identified} "
        f"avg_rt={sum(report.per_turn_rt) / len(report.per_turn_rt):.3f}s"
    )
    return 0


def cmd_cohort(args: argparse.Namespace) -> int:
    runtime = build_runtime(args)
    result = patientsim.build_synthetic_cohort(
        runtime, args.out, participants=args.participants, experts=args.experts, base_seed=args.seed
    )
    print(f"wrote {len(result['transcripts'])} transcripts and {result['groups_file']}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    groups = None
    if args.groups:
        groups = json.loads(Path(args.groups).read_text())
    report = evalstats.summarize(args.transcripts, groups)
    bundle = reporting.write_bundle(report, args.out)
    print(reporting.render_text(report))
    for key, value in bundle.items():
        print(f"{key}: {value}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="a2p2", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    kg = sub.add_parser("kg", help="knowledge graph tools")
    kg_sub = kg.add_subparsers(dest="kg_command", required=True)
    kg_validate = kg_sub.add_parser("validate", help="validate a graph file and print its stats")
    kg_validate.add_argument("--file", help="graph JSON (defaults to the shipped graph)")
    kg_validate.set_defaults(func=cmd_kg_validate)

    serve = sub.add_parser("serve", help="run the session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8070)
    serve.add_argument("--kg", help="graph JSON override")
    serve.add_argument("--responses", help="response bank override")
    serve.add_argument("--policy", help="session-1 policy override")
    serve.add_argument("--data-dir", help="directory for append-only session logs")
    serve.add_argument("--console", help="built console HTML to serve at /console")
    serve.set_defaults(func=cmd_serve)

    simulate = sub.add_parser("simulate", help="replay a scripted scenario with the auto-provider")
    simulate.add_argument("--scenario", required=True, help="scenario file or shipped name (stress, sleep_disturbance)")
    simulate.add_argument("--condition", required=True, choices=["control", "intervention"])
    simulate.add_argument("--seed", type=int, default=7)
    simulate.add_argument("--out", help="transcript output path")
    simulate.add_argument("--participant", help="participant label recorded in the transcript")
    simulate.add_argument("--endpoint", help="drive a remote service instead of in-process")
    simulate.add_argument("--timeout", type=float, default=5.0)
    simulate.add_argument("--patience", type=int, help="items the auto-provider scans for the gold response")
    simulate.add_argument("--kg", help="graph JSON override")
    simulate.add_argument("--responses", help="response bank override")
    simulate.add_argument("--policy", help="policy override")
    simulate.set_defaults(func=cmd_simulate)

    cohort = sub.add_parser("cohort", help="generate a synthetic paired cohort for the eval pipeline")
    cohort.add_argument("--out", required=True)
    cohort.add_argument("--participants", type=int, default=20)
    cohort.add_argument("--experts", type=int, default=11)
    cohort.add_argument("--seed", type=int, default=1000)
    cohort.set_defaults(func=cmd_cohort)

    evaluate = sub.add_parser("eval", help="summarize transcripts into a report bundle")
    evaluate.add_argument("--transcripts", required=True)
    evaluate.add_argument("--groups", help="JSON file mapping participant to expert/non_expert")
    evaluate.add_argument("--out", required=True, help="output directory for the report bundle")
    evaluate.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except A2P2Error as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
