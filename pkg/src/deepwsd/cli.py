"""Command-line front end.

Subcommands: ``score`` one image pair, ``batch`` a manifest of pairs,
``eval`` a scores CSV into a correlation report, ``gen-test-weights`` for
deterministic test archives, and ``verify-fixtures`` to cross-check the
inference core against reference stage tensors.
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np
from PIL import Image, UnidentifiedImageError

from . import backbone, evaluation, tensor_ops
from .exceptions import DeepWSDError
from .metric import MetricConfig, deepwsd_score

SUPPORTED_FORMATS = ("PNG", "BMP")
FIXTURE_INPUT = "input.dwten"
FIXTURE_STAGES = tuple(f"stage{i}.dwten" for i in range(1, 6))
FIXTURE_TOLERANCE = 1e-4

EXIT_PARTIAL = 2


def load_image(path) -> np.ndarray:
    """Decode an 8-bit PNG or BMP into a (3, H, W) float32 array in 0..1.

    Grayscale images are replicated to three channels; alpha is dropped.
    """
    try:
        with Image.open(path) as img:
            if img.format not in SUPPORTED_FORMATS:
                raise DeepWSDError(
                    f"{path}: unsupported format {img.format}; only 8-bit PNG/BMP"
                )
            if img.mode.startswith("I") or img.mode == "F" or "16" in img.mode:
                raise DeepWSDError(f"{path}: only 8-bit images are supported")
            rgb = img.convert("RGB")
            data = np.asarray(rgb, dtype=np.float32) / 255.0
    except UnidentifiedImageError as exc:
        raise DeepWSDError(f"{path}: cannot decode image") from exc
    return np.ascontiguousarray(data.transpose(2, 0, 1))


def metric_options(f):
    f = click.option(
        "--patch-size",
        type=click.Choice(["4", "8", "16"]),
        default="4",
        show_default=True,
        help="Side of the square comparison patches.",
    )(f)
    f = click.option(
        "--no-adaptive-weight", is_flag=True, help="Use weight 1 instead of g(s)."
    )(f)
    f = click.option(
        "--no-pixel-stage", is_flag=True, help="Drop the raw-pixel stage from both sums."
    )(f)
    f = click.option(
        "--pixel-wsd-only",
        is_flag=True,
        help="Pixel-domain Wasserstein only (drops feature stages and Euclidean term).",
    )(f)
    f = click.option(
        "--no-euclidean", is_flag=True, help="Drop the weighted Euclidean term."
    )(f)
    return f


def build_config(patch_size, no_adaptive_weight, no_pixel_stage, pixel_wsd_only, no_euclidean):
    try:
        return MetricConfig(
            patch_size=int(patch_size),
            use_adaptive_weight=not no_adaptive_weight,
            use_pixel_stage=True if pixel_wsd_only else not no_pixel_stage,
            use_feature_stages=not pixel_wsd_only,
            use_euclidean_term=not (no_euclidean or pixel_wsd_only),
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))


def weights_option(f):
    return click.option(
        "--weights",
        envvar="DEEPWSD_WEIGHTS",
        required=True,
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="DWSDW1 weight archive (defaults to $DEEPWSD_WEIGHTS).",
    )(f)


@click.group()
def main():
    """Full-reference image quality scoring with patchwise Wasserstein
    distances over raw pixels and five backbone feature stages."""


@main.command()
@click.option("--ref", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dist", required=True, type=click.Path(exists=True, dir_okay=False))
@weights_option
@metric_options
@click.option("--breakdown", is_flag=True, help="Print per-stage terms.")
def score(ref, dist, weights, breakdown, **metric_flags):
    """Score one distorted image against its reference."""
    config = build_config(**metric_flags)
    try:
        archive = backbone.load_weights(weights)
        ref_stack = backbone.extract_features(load_image(ref), archive)
        dist_stack = backbone.extract_features(load_image(dist), archive)
        result = deepwsd_score(ref_stack, dist_stack, config)
    except DeepWSDError as exc:
        raise click.ClickException(str(exc))
    if breakdown:
        for i, name in enumerate(ref_stack.stage_names):
            marker = "" if i in result.active_stages else " (inactive)"
            click.echo(
                f"stage {i} {name}: wsd={result.per_stage_wsd[i]!r} "
                f"eul={result.per_stage_eul[i]!r} g={result.per_stage_g[i]!r}{marker}"
            )
        click.echo(f"D_wsd={result.d_wsd!r}")
        click.echo(f"D_eul={result.d_eul!r}")
    click.echo(repr(result.score))


def _score_row(archive, config, row):
    ref_path, dist_path, mos = row
    try:
        ref_stack = backbone.extract_features(load_image(ref_path), archive)
        dist_stack = backbone.extract_features(load_image(dist_path), archive)
        value = deepwsd_score(ref_stack, dist_stack, config).score
        return (ref_path, dist_path, mos, value, "")
    except (DeepWSDError, OSError) as exc:
        return (ref_path, dist_path, mos, None, str(exc))


@main.command()
@click.option(
    "--manifest", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@weights_option
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path))
@metric_options
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel rows.")
def batch(manifest, weights, out, jobs, **metric_flags):
    """Score every pair in a manifest CSV; output order follows the input."""
    config = build_config(**metric_flags)
    try:
        rows = evaluation.read_manifest(manifest)
        archive = backbone.load_weights(weights)
    except (DeepWSDError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scored = list(pool.map(lambda r: _score_row(archive, config, r), rows))
    else:
        scored = [_score_row(archive, config, row) for row in rows]
    evaluation.write_scores_csv(out, scored)
    failures = [r for r in scored if r[3] is None]
    click.echo(f"scored {len(scored) - len(failures)}/{len(scored)} pairs -> {out}")
    for ref_path, dist_path, _, _, error in failures:
        click.echo(f"failed: {ref_path} vs {dist_path}: {error}", err=True)
    if failures:
        sys.exit(EXIT_PARTIAL)


@main.command("eval")
@click.option(
    "--scores", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path))
def eval_cmd(scores, out):
    """Fit the logistic mapping and report PLCC/SRCC/KRCC and R."""
    try:
        pairs = evaluation.read_scores_csv(scores)
        if len(pairs) < 5:
            raise click.ClickException(
                f"need at least 5 scored rows, found {len(pairs)}"
            )
        report = evaluation.evaluate_scored(pairs)
    except (DeepWSDError, ValueError) as exc:
        raise click.ClickException(str(exc))
    evaluation.write_report_json(out, report)
    for key, value in report.to_dict().items():
        if key != "params":
            click.echo(f"{key}: {value}")


@main.command("gen-test-weights")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path))
def gen_test_weights_cmd(seed, out):
    """Write a deterministic pseudo-random weight archive."""
    try:
        archive = backbone.gen_test_weights(seed, out)
    except OSError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {len(archive.tensors)} tensors -> {out}")


@main.command("verify-fixtures")
@click.option(
    "--fixtures",
    required=True,
    type=click.Path(exists=True, file_okay=False, path_type=Path),
)
@weights_option
def verify_fixtures(fixtures, weights):
    """Recompute stage features for a fixture input and compare against
    the recorded expected tensors (max relative error <= 1e-4 per stage)."""
    input_path = fixtures / FIXTURE_INPUT
    if not input_path.exists():
        raise click.ClickException(f"{fixtures}: missing {FIXTURE_INPUT}")
    missing = [name for name in FIXTURE_STAGES if not (fixtures / name).exists()]
    if missing:
        raise click.ClickException(f"{fixtures}: missing {', '.join(missing)}")
    try:
        archive = backbone.load_weights(weights)
        image = tensor_ops.read_tensor(input_path)
        stack = backbone.extract_features(image, archive)
    except DeepWSDError as exc:
        raise click.ClickException(str(exc))
    failed = []
    for stage_index, name in enumerate(FIXTURE_STAGES, start=1):
        expected = tensor_ops.read_tensor(fixtures / name)
        actual = stack.stages[stage_index]
        if expected.shape != actual.shape:
            click.echo(f"stage {stage_index}: shape {actual.shape} != {expected.shape}")
            failed.append(stage_index)
            continue
        scale = max(float(np.abs(expected).max()), 1e-30)
        rel_err = float(np.abs(actual - expected).max()) / scale
        status = "ok" if rel_err <= FIXTURE_TOLERANCE else "FAIL"
        click.echo(f"stage {stage_index}: max relative error {rel_err:.3e} {status}")
        if rel_err > FIXTURE_TOLERANCE:
            failed.append(stage_index)
    if failed:
        raise click.ClickException(
            f"stages {failed} exceed tolerance {FIXTURE_TOLERANCE:g}"
        )
    click.echo("all stages within tolerance")


if __name__ == "__main__":
    main()
