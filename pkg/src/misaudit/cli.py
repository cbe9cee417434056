"""Pipeline driver: ingest -> sample -> probe -> score -> categorize -> report,
plus permutation evaluation and the human-study service.

Each run lives under ``<runs-root>/<run-id>/`` with a manifest recording which
stages completed and a hash of their inputs; re-running a completed stage with
identical inputs is a no-op, while changed inputs abort with a message to
start a new run. Reports and permutation artifacts re-render deterministically
from the persisted files, so they can be deleted and rebuilt at will.

Exit codes: 2 for usage errors, 3 for unmet stage preconditions (missing
upstream artifact, missing API key) and credential rejections, 1 for any
other toolkit error.
"""

import functools
import hashlib
import json
import re
import shlex
import sys
from pathlib import Path

import click

from .categories import QuestionCategory, categorize
from .config import API_KEY_ENV, ToolConfig, api_key, load_config
from .dataset import NormalizedQuestion
from .dataset.loaders import SourceDescriptor, load_dataset, write_normalized
from .dataset.sampling import sample_questions
from .errors import (
    AuthenticationError,
    IngestionError,
    IntegrityError,
    MisauditError,
    PreconditionError,
)
from .permute import (
    EvaluationResult,
    HTTPAdapter,
    PermutationPlan,
    PermutationRuns,
    ReplayAdapter,
    SubprocessAdapter,
    build_permutation_plan,
    delta_table,
    evaluate,
    select_biased,
)
from .probe.cache import ResponseCache
from .probe.client import ChatClient, ClientConfig
from .probe.conditions import default_registry, standard_conditions
from .probe.logs import ResponseLog, score_profiles
from .probe.prompts import PromptParams
from .probe.runner import run_probe
from .probe.stub import StubServer
from .profiles import AccuracyProfile
from .registry import ModalityRegistry
from .reports import (
    distribution_report,
    proportions_by_annotated_type,
    proportions_csv,
)
from .runs import RunDirectory, RunManifest, config_hash
from .scoring import mis_vector
from .study.agreement import agreement_report
from .study.records import RecordStore, StudyDefinition
from .study.service import create_app
from .study.stats import human_profiles, unanimous_filter

SAMPLE_SCHEMA = "misaudit/sample@1"
PROFILES_SCHEMA = "misaudit/profiles@1"
CATEGORIES_SCHEMA = "misaudit/categories@1"

EXIT_FAILURE = 1
EXIT_PRECONDITION = 3

RESPONSES_NAME = "responses.jsonl"
EVENTS_NAME = "events.jsonl"


# --- shared plumbing --------------------------------------------------------


class GlobalOpts:
    """Values of the group-level flags, resolved lazily against the config."""

    def __init__(self, config_path, seed, parallelism, stub):
        self.config_path = config_path
        self.seed = seed
        self.parallelism = parallelism
        self.stub = stub
        self._config = None

    @property
    def config(self) -> ToolConfig:
        if self._config is None:
            self._config = load_config(self.config_path)
        return self._config

    def resolve_seed(self, override: int | None) -> int:
        if override is not None:
            return override
        if self.seed is not None:
            return self.seed
        return self.config.seed

    def resolve_parallelism(self, override: int | None) -> int:
        if override is not None:
            return override
        if self.parallelism is not None:
            return self.parallelism
        return self.config.parallelism


def pipeline_errors(fn):
    """Map toolkit errors to the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (PreconditionError, AuthenticationError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_PRECONDITION)
        except MisauditError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_FAILURE)

    return wrapper


def _digest_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_bundle(dataset_dir: str, *, drop_dangling: bool = False):
    return load_dataset(
        SourceDescriptor(flavor="normalized", root=Path(dataset_dir)),
        drop_dangling=drop_dangling,
    )


def _run_dir(opts: GlobalOpts, runs_root, run_id: str) -> RunDirectory:
    root = Path(runs_root) if runs_root else Path(opts.config.runs_root)
    return RunDirectory(root, run_id)


def _read_header_jsonl(path: Path, schema: str) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("schema") != schema:
        raise IntegrityError(f"{path}: not a {schema} file")
    return lines[0], lines[1:]


def _write_header_jsonl(path: Path, header: dict, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _read_sample(run_dir: RunDirectory) -> list[NormalizedQuestion]:
    run_dir.require(run_dir.sample_path, "sample")
    _, records = _read_header_jsonl(run_dir.sample_path, SAMPLE_SCHEMA)
    return [NormalizedQuestion.from_record(rec) for rec in records]


def _read_categories(
    run_dir: RunDirectory,
) -> tuple[ModalityRegistry, dict[str, QuestionCategory]]:
    run_dir.require(run_dir.categories_path, "categorize")
    header, records = _read_header_jsonl(run_dir.categories_path, CATEGORIES_SCHEMA)
    registry = ModalityRegistry(header["modalities"])
    return registry, {
        rec["question_id"]: QuestionCategory.from_json(rec) for rec in records
    }


def _slug(text: str) -> str:
    cleaned = re.sub(r"[^A-Za-z0-9._-]+", "-", text).strip("-").lower()
    return cleaned or "adapter"


# --- command group ----------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="misaudit")
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="TOML config file (model, endpoint, datasets, runs root).",
)
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.option(
    "--parallelism", type=int, default=None, help="Concurrent request workers."
)
@click.option(
    "--stub",
    type=click.Path(dir_okay=False),
    default=None,
    help="Answer fixture JSON; probe against a local stub instead of the network.",
)
@click.pass_context
def cli(ctx, config_path, seed, parallelism, stub):
    """Audit how much each modality matters in multiple-choice VidQA."""
    ctx.obj = GlobalOpts(config_path, seed, parallelism, stub)


def main():
    cli(prog_name="misaudit")


# --- ingest -----------------------------------------------------------------


@cli.command("ingest")
@click.option("--flavor", default=None, help="Source layout: tvqa, lifeqa, or avqa.")
@click.option(
    "--root", "root_dir", type=click.Path(file_okay=False), default=None,
    help="Source dataset directory.",
)
@click.option(
    "--dataset", "dataset_tag", default=None,
    help="Named dataset from the config file (alternative to --flavor/--root).",
)
@click.option(
    "--out", "out_dir", type=click.Path(file_okay=False), required=True,
    help="Destination for the normalized layout.",
)
@click.option(
    "--drop-dangling", is_flag=True,
    help="Drop questions whose clip has no assets instead of aborting.",
)
@click.option(
    "--no-copy-images", is_flag=True, help="Emit metadata only; skip frame files."
)
@click.pass_obj
@pipeline_errors
def cmd_ingest(opts, flavor, root_dir, dataset_tag, out_dir, drop_dangling, no_copy_images):
    """Normalize a source dataset into the on-disk interchange layout."""
    if dataset_tag is not None:
        source = opts.config.datasets.get(dataset_tag)
        if source is None:
            raise PreconditionError(
                f"dataset {dataset_tag!r} is not defined in the config file"
            )
        flavor, root_dir = source.flavor, source.root
    if flavor is None or root_dir is None:
        raise click.UsageError("pass either --dataset or both --flavor and --root")
    bundle = load_dataset(
        SourceDescriptor(flavor=flavor, root=Path(root_dir)),
        drop_dangling=drop_dangling,
    )
    write_normalized(bundle, Path(out_dir), copy_images=not no_copy_images)
    click.echo(
        f"ingest: {len(bundle.questions)} questions, {len(bundle.assets)} clips "
        f"-> {out_dir}"
    )
    if bundle.rejected_question_ids:
        click.echo(
            f"ingest: dropped {len(bundle.rejected_question_ids)} questions with "
            "missing clip assets"
        )


# --- sample -----------------------------------------------------------------


@cli.command("sample")
@click.option("--run-id", required=True)
@click.option(
    "--dataset-dir", required=True, type=click.Path(file_okay=False),
    help="Normalized dataset directory (output of ingest).",
)
@click.option("--size", type=int, required=True, help="Number of questions to draw.")
@click.option("--seed", "seed_override", type=int, default=None)
@click.option(
    "--dataset-tag", default=None,
    help="Label recorded in the manifest; defaults to the dataset dir name.",
)
@click.option("--runs-root", type=click.Path(file_okay=False), default=None)
@click.pass_obj
@pipeline_errors
def cmd_sample(opts, run_id, dataset_dir, size, seed_override, dataset_tag, runs_root):
    """Draw a reproducible uniform sample and start a run."""
    run_dir = _run_dir(opts, runs_root, run_id)
    seed = opts.resolve_seed(seed_override)
    tag = dataset_tag or Path(dataset_dir).name
    questions_file = Path(dataset_dir) / "questions.jsonl"
    if not questions_file.exists():
        raise PreconditionError(
            f"{questions_file} not found; run the 'ingest' stage first",
            missing_path=str(questions_file),
        )
    input_hash = config_hash(
        {"questions": _digest_file(questions_file), "size": size, "seed": seed}
    )

    if run_dir.exists():
        manifest = run_dir.load_manifest()
        if manifest.should_skip("sample", input_hash):
            click.echo("sample: already complete, skipping")
            return
    else:
        manifest = RunManifest(
            run_id=run_id,
            dataset_tag=tag,
            config_digest=config_hash(opts.config.to_hashable()),
            sample_seed=seed,
            sample_size=size,
            model_params=PromptParams(model_name=opts.config.model_name).to_record(),
        )
        run_dir.create(manifest)

    bundle = _load_bundle(dataset_dir)
    picked = sample_questions(bundle.questions, size, seed)
    header = {
        "schema": SAMPLE_SCHEMA,
        "run_id": run_id,
        "dataset": tag,
        "seed": seed,
        "size": size,
    }
    _write_header_jsonl(
        run_dir.sample_path, header, (q.to_record() for q in picked)
    )
    manifest.mark_complete("sample", input_hash)
    run_dir.save_manifest(manifest)
    click.echo(f"sample: {len(picked)} questions -> {run_dir.sample_path}")


# --- probe ------------------------------------------------------------------


@cli.command("probe")
@click.option("--run-id", required=True)
@click.option("--dataset-dir", required=True, type=click.Path(file_okay=False))
@click.option("--runs-root", type=click.Path(file_okay=False), default=None)
@click.option("--model", default=None, help="Override the configured model name.")
@click.option("--endpoint", default=None, help="Override the configured endpoint.")
@click.option(
    "--cache-dir", type=click.Path(file_okay=False), default=None,
    help="Response cache location (default: <runs-root>/cache, shared by runs).",
)
@click.option("--parallelism", "parallelism_override", type=int, default=None)
@click.pass_obj
@pipeline_errors
def cmd_probe(
    opts, run_id, dataset_dir, runs_root, model, endpoint, cache_dir,
    parallelism_override,
):
    """Ask the model every (question, condition) pair and log binary outcomes."""
    run_dir = _run_dir(opts, runs_root, run_id)
    manifest = run_dir.load_manifest()
    questions = _read_sample(run_dir)
    bundle = _load_bundle(dataset_dir)
    registry = default_registry()
    conditions = standard_conditions(registry)

    config = opts.config
    params = PromptParams(
        model_name=model or config.model_name,
        max_tokens=config.max_tokens,
        top_p=config.top_p,
        seed=opts.resolve_seed(None),
        image_detail=config.image_detail,
    )
    input_hash = config_hash(
        {
            "sample": _digest_file(run_dir.sample_path),
            "params": params.to_record(),
            "conditions": [c.label(registry) for c in conditions],
        }
    )
    if manifest.should_skip("probe", input_hash):
        click.echo("probe: already complete, skipping")
        return

    if manifest.model_params != params.to_record():
        manifest.model_params = params.to_record()

    cache = ResponseCache(Path(cache_dir) if cache_dir else run_dir.path.parent / "cache")
    stub = None
    try:
        if opts.stub is not None:
            fixture = json.loads(Path(opts.stub).read_text(encoding="utf-8"))
            stub = StubServer(fixture).start()
            resolved_endpoint = stub.endpoint
            key = api_key() or "stub-key"
        else:
            key = api_key()
            if not key:
                raise PreconditionError(
                    f"no API key: set {API_KEY_ENV} in the environment, or pass "
                    "--stub <fixture.json> for an offline run"
                )
            resolved_endpoint = endpoint or config.endpoint
        client = ChatClient(ClientConfig(endpoint=resolved_endpoint, api_key=key))
        log = run_probe(
            questions,
            bundle.assets,
            conditions,
            registry=registry,
            client=client,
            cache=cache,
            params=params,
            run_id=run_id,
            dataset_tag=manifest.dataset_tag,
            raw_dir=run_dir.raw_dir,
            events_path=run_dir.logs_dir / EVENTS_NAME,
            parallelism=opts.resolve_parallelism(parallelism_override),
        )
        stub_stats = stub.stats if stub is not None else None
    finally:
        if stub is not None:
            stub.stop()

    log.write(run_dir.logs_dir / RESPONSES_NAME)
    manifest.mark_complete("probe", input_hash)
    run_dir.save_manifest(manifest)
    click.echo(
        f"probe: {len(log.entries)} (question, condition) results -> "
        f"{run_dir.logs_dir / RESPONSES_NAME}"
    )
    if stub_stats is not None:
        # 0 backend requests on a warm cache proves the rerun stayed offline
        click.echo(f"probe: stub handled {stub_stats['requests']} backend requests")


# --- score ------------------------------------------------------------------


@cli.command("score")
@click.option("--run-id", required=True)
@click.option("--runs-root", type=click.Path(file_okay=False), default=None)
@click.pass_obj
@pipeline_errors
def cmd_score(opts, run_id, runs_root):
    """Fold the response log into one accuracy profile per question."""
    run_dir = _run_dir(opts, runs_root, run_id)
    manifest = run_dir.load_manifest()
    responses_path = run_dir.require(run_dir.logs_dir / RESPONSES_NAME, "probe")
    input_hash = config_hash({"responses": _digest_file(responses_path)})
    if manifest.should_skip("score", input_hash):
        click.echo("score: already complete, skipping")
        return

    log = ResponseLog.read(responses_path)
    registry = ModalityRegistry(log.modalities)
    profiles = score_profiles(log, registry)
    header = {
        "schema": PROFILES_SCHEMA,
        "run_id": run_id,
        "dataset": log.dataset,
        "modalities": list(registry.names),
    }
    _write_header_jsonl(
        run_dir.profiles_path,
        header,
        (p.to_record() for p in sorted(profiles, key=lambda p: p.question_id)),
    )
    manifest.mark_complete("score", input_hash)
    run_dir.save_manifest(manifest)
    click.echo(f"score: {len(profiles)} profiles -> {run_dir.profiles_path}")


# --- categorize -------------------------------------------------------------


@cli.command("categorize")
@click.option("--run-id", required=True)
@click.option("--runs-root", type=click.Path(file_okay=False), default=None)
@click.pass_obj
@pipeline_errors
def cmd_categorize(opts, run_id, runs_root):
    """Assign each profiled question an importance category."""
    run_dir = _run_dir(opts, runs_root, run_id)
    manifest = run_dir.load_manifest()
    profiles_path = run_dir.require(run_dir.profiles_path, "score")
    input_hash = config_hash({"profiles": _digest_file(profiles_path)})
    if manifest.should_skip("categorize", input_hash):
        click.echo("categorize: already complete, skipping")
        return

    header, records = _read_header_jsonl(profiles_path, PROFILES_SCHEMA)
    registry = ModalityRegistry(header["modalities"])
    out_records = []
    for rec in records:
        profile = AccuracyProfile.from_record(rec)
        vector = mis_vector(profile)
        category = categorize(profile, vector)
        entry = {"question_id": profile.question_id}
        entry.update(category.to_json(registry))
        entry["mis"] = [[s.numerator, s.denominator] for s in vector.scores]
        out_records.append(entry)
    out_records.sort(key=lambda rec: rec["question_id"])
    out_header = {
        "schema": CATEGORIES_SCHEMA,
        "run_id": run_id,
        "dataset": header.get("dataset", manifest.dataset_tag),
        "modalities": list(registry.names),
    }
    _write_header_jsonl(run_dir.categories_path, out_header, out_records)
    manifest.mark_complete("categorize", input_hash)
    run_dir.save_manifest(manifest)
    click.echo(
        f"categorize: {len(out_records)} questions -> {run_dir.categories_path}"
    )


# --- report -----------------------------------------------------------------


@cli.command("report")
@click.option("--run-id", required=True)
@click.option("--runs-root", type=click.Path(file_okay=False), default=None)
@click.option(
    "--table",
    type=click.Choice(["distribution", "proportions"]),
    default="distribution",
    show_default=True,
)
@click.pass_obj
@pipeline_errors
def cmd_report(opts, run_id, runs_root, table):
    """Render category reports (text to stdout, CSV/JSON to reports/)."""
    run_dir = _run_dir(opts, runs_root, run_id)
    manifest = run_dir.load_manifest()
    registry, categories = _read_categories(run_dir)
    run_dir.reports_dir.mkdir(parents=True, exist_ok=True)

    if table == "distribution":
        report = distribution_report(categories, manifest.dataset_tag, registry)
        text = report.to_text()
        (run_dir.reports_dir / "distribution.txt").write_text(
            text + "\n", encoding="utf-8"
        )
        (run_dir.reports_dir / "distribution.csv").write_text(
            report.to_csv(), encoding="utf-8"
        )
        (run_dir.reports_dir / "distribution.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        click.echo(text)
    else:
        questions = _read_sample(run_dir)
        rows = proportions_by_annotated_type(categories, questions, registry)
        csv_text = proportions_csv(rows)
        (run_dir.reports_dir / "proportions.csv").write_text(
            csv_text, encoding="utf-8"
        )
        json_rows = {
            kind: {
                "n": row["n"],
                "proportions": {
                    token: [value.numerator, value.denominator]
                    for token, value in row["proportions"].items()
                },
            }
            for kind, row in rows.items()
        }
        (run_dir.reports_dir / "proportions.json").write_text(
            json.dumps(json_rows, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        click.echo(csv_text, nl=False)

    input_hash = config_hash(
        {"categories": _digest_file(run_dir.categories_path)}
    )
    manifest.mark_complete("report", input_hash)
    run_dir.save_manifest(manifest)


# --- permute-plan -----------------------------------------------------------


def _plan_path(run_dir: RunDirectory, biased_class: str, target: str) -> Path:
    # first segment: which biased class supplies the questions; second: which
    # modality the donor clip replaces
    return run_dir.permutation_dir / f"plan-{_slug(biased_class)}-{_slug(target)}.json"


@cli.command("permute-plan")
@click.option("--run-id", required=True)
@click.option("--dataset-dir", required=True, type=click.Path(file_okay=False))
@click.option("--runs-root", type=click.Path(file_okay=False), default=None)
@click.option(
    "--biased-class", "biased_class", required=True,
    help="Modality name whose biased questions to evaluate (e.g. subtitle).",
)
@click.option(
    "--target", required=True,
    help="Modality whose content the donor clip replaces.",
)
@click.option("--seed", "seed_override", type=int, default=None)
@click.pass_obj
@pipeline_errors
def cmd_permute_plan(
    opts, run_id, dataset_dir, runs_root, biased_class, target, seed_override
):
    """Pick a donor clip per biased question (clip-level derangement)."""
    run_dir = _run_dir(opts, runs_root, run_id)
    run_dir.load_manifest()
    registry, categories = _read_categories(run_dir)
    if biased_class not in registry.names:
        raise click.UsageError(
            f"--biased-class must be one of {list(registry.names)}"
        )
    if target not in registry.names:
        raise click.UsageError(f"--target must be one of {list(registry.names)}")
    seed = opts.resolve_seed(seed_override)

    selected = select_biased(categories).get(registry.names.index(biased_class), [])
    if not selected:
        raise PreconditionError(
            f"no questions categorized biased:{biased_class} in this run"
        )
    wanted = set(selected)
    questions = [q for q in _read_sample(run_dir) if q.question_id in wanted]
    bundle = _load_bundle(dataset_dir)

    path = _plan_path(run_dir, biased_class, target)
    target_index = registry.names.index(target)
    if path.exists():
        existing = PermutationPlan.load(path)
        if existing.seed == seed and existing.target_modality == target_index:
            click.echo(f"permute-plan: {path} is up to date, skipping")
            return

    plan = build_permutation_plan(questions, bundle.assets, target_index, seed)
    plan.write(path)
    click.echo(
        f"permute-plan: {len(plan.entries)} donors "
        f"(cross_source={plan.cross_source}) -> {path}"
    )


# --- permute-eval -----------------------------------------------------------


_VARIANT_SLUGS = {
    "original": "original",
    "permuted:subtitle": "subtitle-permuted",
    "permuted:video": "video-permuted",
}


def _result_path(run_dir: RunDirectory, biased_class: str, label: str, variant: str) -> Path:
    slug = _VARIANT_SLUGS.get(variant, _slug(variant))
    return (
        run_dir.permutation_dir
        / f"result-{_slug(biased_class)}-{_slug(label)}-{slug}.json"
    )


def _render_deltas(run_dir: RunDirectory, biased_class: str) -> str | None:
    """Assemble the delta table for one biased class from the saved results.

    Adapters missing any of the three variants are left out until their
    remaining runs land.
    """
    prefix = f"result-{_slug(biased_class)}-"
    by_adapter: dict[str, dict[str, EvaluationResult]] = {}
    for path in sorted(run_dir.permutation_dir.glob(prefix + "*.json")):
        result = EvaluationResult.load(path)
        by_adapter.setdefault(result.adapter_name, {})[result.variant] = result
    rows = []
    for adapter in sorted(by_adapter):
        variants = by_adapter[adapter]
        if not {"original", "permuted:subtitle", "permuted:video"} <= set(variants):
            continue
        rows.append(
            PermutationRuns(
                adapter=adapter,
                original=variants["original"],
                subtitle_permuted=variants["permuted:subtitle"],
                video_permuted=variants["permuted:video"],
            )
        )
    if not rows:
        return None
    report = delta_table({f"{biased_class}-biased": rows})
    base = run_dir.permutation_dir / f"deltas-{_slug(biased_class)}"
    text = report.to_text()
    base.with_suffix(".txt").write_text(text + "\n", encoding="utf-8")
    base.with_suffix(".json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return text


@cli.command("permute-eval")
@click.option("--run-id", required=True)
@click.option("--dataset-dir", required=True, type=click.Path(file_okay=False))
@click.option("--runs-root", type=click.Path(file_okay=False), default=None)
@click.option(
    "--biased-class", "biased_class", required=True,
    help="Which biased question class to evaluate (modality name).",
)
@click.option("--label", required=True, help="Adapter name shown in the table.")
@click.option(
    "--replay", type=click.Path(dir_okay=False), default=None,
    help="JSON map question_id -> chosen index (recorded answers).",
)
@click.option(
    "--adapter-cmd", default=None,
    help="Command answering line-delimited JSON requests on stdio.",
)
@click.option("--adapter-url", default=None, help="HTTP adapter endpoint.")
@click.option(
    "--variant",
    type=click.Choice(["all", "original", "subtitle", "video"]),
    default="all",
    show_default=True,
    help="Which input variant(s) to run.",
)
@click.option("--parallelism", "parallelism_override", type=int, default=None)
@click.pass_obj
@pipeline_errors
def cmd_permute_eval(
    opts, run_id, dataset_dir, runs_root, biased_class, label, replay,
    adapter_cmd, adapter_url, variant, parallelism_override,
):
    """Measure an adapter on original vs permuted inputs and render deltas."""
    run_dir = _run_dir(opts, runs_root, run_id)
    run_dir.load_manifest()
    registry, categories = _read_categories(run_dir)
    if biased_class not in registry.names:
        raise click.UsageError(
            f"--biased-class must be one of {list(registry.names)}"
        )
    chosen = [flag for flag in (replay, adapter_cmd, adapter_url) if flag]
    if len(chosen) != 1:
        raise click.UsageError(
            "pass exactly one of --replay, --adapter-cmd, --adapter-url"
        )

    selected = select_biased(categories).get(registry.names.index(biased_class), [])
    if not selected:
        raise PreconditionError(
            f"no questions categorized biased:{biased_class} in this run"
        )
    wanted = set(selected)
    questions = [q for q in _read_sample(run_dir) if q.question_id in wanted]
    bundle = _load_bundle(dataset_dir)

    targets = {"subtitle": ["subtitle"], "video": ["video"], "original": []}.get(
        variant, list(registry.names)
    )
    plans: dict[str, PermutationPlan] = {}
    for target in targets:
        path = _plan_path(run_dir, biased_class, target)
        run_dir.require(path, "permute-plan")
        plans[target] = PermutationPlan.load(path)

    if replay:
        answers = json.loads(Path(replay).read_text(encoding="utf-8"))
        adapter = ReplayAdapter(label, answers)
    elif adapter_cmd:
        adapter = SubprocessAdapter(label, shlex.split(adapter_cmd))
    else:
        adapter = HTTPAdapter(label, adapter_url)

    parallelism = opts.resolve_parallelism(parallelism_override)
    run_dir.permutation_dir.mkdir(parents=True, exist_ok=True)
    try:
        runs = []
        if variant in ("all", "original"):
            runs.append((None, "original"))
        for target in targets:
            runs.append((plans[target], f"permuted:{target}"))
        for plan, name in runs:
            result = evaluate(
                adapter,
                questions,
                bundle.assets,
                registry,
                plan,
                parallelism=parallelism,
            )
            result.write(_result_path(run_dir, biased_class, label, name))
            pct = float(result.accuracy * 100)
            click.echo(f"permute-eval: {label} {name}: accuracy {pct:.1f}%")
    finally:
        close = getattr(adapter, "close", None)
        if close is not None:
            close()

    text = _render_deltas(run_dir, biased_class)
    if text is not None:
        click.echo(text)


# --- study-serve ------------------------------------------------------------


@cli.command("study-serve")
@click.option(
    "--study", "study_path", required=True, type=click.Path(dir_okay=False),
    help="Study definition JSON (questions, groups, conditions).",
)
@click.option("--dataset-dir", required=True, type=click.Path(file_okay=False))
@click.option(
    "--records", "records_path", required=True, type=click.Path(dir_okay=False),
    help="Append-only annotation record store (created if absent).",
)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--admin-token", default=None, help="Bearer token for /api/admin/export.")
@click.option(
    "--frontend", "frontend_dir", type=click.Path(file_okay=False), default=None,
    help="Static annotation UI directory to serve at /.",
)
@click.pass_obj
@pipeline_errors
def cmd_study_serve(
    opts, study_path, dataset_dir, records_path, host, port, admin_token,
    frontend_dir,
):
    """Host the annotation service for the human perception study."""
    import uvicorn

    study = StudyDefinition.load(study_path)
    bundle = _load_bundle(dataset_dir)
    store = RecordStore(records_path)
    app = create_app(
        study, bundle, store, admin_token=admin_token, frontend_dir=frontend_dir
    )
    click.echo(f"study-serve: listening on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


# --- study-report -----------------------------------------------------------


def _categorize_profiles(profiles) -> dict[str, QuestionCategory]:
    return {p.question_id: categorize(p) for p in profiles}


def _category_records(categories: dict, registry) -> list[dict]:
    records = []
    for question_id in sorted(categories):
        entry = {"question_id": question_id}
        entry.update(categories[question_id].to_json(registry))
        records.append(entry)
    return records


@cli.command("study-report")
@click.option("--study", "study_path", required=True, type=click.Path(dir_okay=False))
@click.option("--dataset-dir", required=True, type=click.Path(file_okay=False))
@click.option("--records", "records_path", required=True, type=click.Path(dir_okay=False))
@click.option(
    "--machine-categories", "machine_path", type=click.Path(dir_okay=False),
    default=None,
    help="categories.jsonl from a probe run, for human-machine agreement.",
)
@click.option(
    "--out", "out_dir", required=True, type=click.Path(file_okay=False),
    help="Directory for the report artifacts.",
)
@click.pass_obj
@pipeline_errors
def cmd_study_report(
    opts, study_path, dataset_dir, records_path, machine_path, out_dir
):
    """Summarize study records: kappas, confidence buckets, confusion counts.

    Two categorization passes are reported: "unanimous" keeps only questions
    whose annotators all agree per condition (the primary comparison basis),
    "weighted" keeps every question via confidence-weighted rounding.
    """
    study = StudyDefinition.load(study_path)
    registry = study.registry()
    bundle = _load_bundle(dataset_dir)
    if not Path(records_path).exists():
        raise PreconditionError(
            f"{records_path} not found; collect annotations with 'study-serve' first",
            missing_path=str(records_path),
        )
    store = RecordStore(records_path)
    records = store.records()
    if not records:
        raise PreconditionError("the record store is empty; nothing to report")

    study_ids = set(study.question_ids)
    questions = [q for q in bundle.questions if q.question_id in study_ids]

    machine_categories: dict[str, QuestionCategory] = {}
    if machine_path is not None:
        header, machine_records = _read_header_jsonl(
            Path(machine_path), CATEGORIES_SCHEMA
        )
        if tuple(header["modalities"]) != registry.names:
            raise IntegrityError(
                f"machine categories cover modalities {header['modalities']}, "
                f"study uses {list(registry.names)}"
            )
        machine_categories = {
            rec["question_id"]: QuestionCategory.from_json(rec)
            for rec in machine_records
            if rec["question_id"] in study_ids
        }

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    passes = {}
    for name, kept_questions in (
        ("unanimous", unanimous_filter(records, questions)),
        ("weighted", questions),
    ):
        profiles = human_profiles(records, kept_questions, registry)
        categories = _categorize_profiles(profiles)
        _write_header_jsonl(
            out / f"human-categories-{name}.jsonl",
            {
                "schema": CATEGORIES_SCHEMA,
                "source": f"human-study:{name}",
                "modalities": list(registry.names),
            },
            _category_records(categories, registry),
        )
        report = agreement_report(
            records, kept_questions, categories, machine_categories, registry
        )
        (out / f"agreement-{name}.json").write_text(
            json.dumps(report.to_record(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        passes[name] = (len(kept_questions), report)

    for name, (n_questions, report) in passes.items():
        record = report.to_record()
        click.echo(
            f"study-report [{name}]: {n_questions} questions, "
            f"fleiss={record['fleiss_kappa']}, cohen={record['cohen_kappa']}"
        )
    click.echo(f"study-report: artifacts -> {out}")


if __name__ == "__main__":
    main()
