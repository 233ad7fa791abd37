"""Thin command-line client for the service.

Every subcommand builds a request, sends it to the API, and prints the
response. By default the app is served in-process (no network); pass
--server to talk to a remote instance started with `dadet serve`.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric abort.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

EXIT_CODES = {"config": 2, "data": 3, "numeric": 4}


class ServiceClient:
    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette wants the not-yet-published httpx2 for its test client
                warnings.filterwarnings(
                    "ignore", message="Using `httpx` with `starlette.testclient` is deprecated"
                )
                from starlette.testclient import TestClient

                from dadet.service.app import create_app

                self._client = TestClient(create_app(), raise_server_exceptions=False)

    def call(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        body = response.json()
        if response.status_code >= 400:
            error = body.get("error")
            if error:  # package error with a mapped exit code
                click.echo(f"error ({error['code']}): {error['message']}", err=True)
                sys.exit(EXIT_CODES.get(error["code"], 1))
            click.echo(f"error: {json.dumps(body)}", err=True)
            sys.exit(2 if response.status_code == 422 else 1)
        return body


@click.group()
@click.option("--server", default=None, help="Base URL of a running service; default runs in-process.")
@click.pass_context
def main(ctx, server):
    """Domain-adaptive detection experiments."""
    ctx.obj = {"server": server}


def _client(ctx) -> ServiceClient:
    return ServiceClient(ctx.obj["server"])


def _parse_override(raw: str) -> tuple[str, object]:
    if "=" not in raw:
        raise click.UsageError(f"--set expects key=value, got '{raw}'")
    key, value = raw.split("=", 1)
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _load_config(config_path: str | None, overrides: tuple[str, ...]) -> dict:
    data: dict = {}
    if config_path:
        try:
            data = json.loads(open(config_path).read())
        except FileNotFoundError:
            click.echo(f"error (config): config file not found: {config_path}", err=True)
            sys.exit(EXIT_CODES["config"])
        except json.JSONDecodeError as exc:
            click.echo(f"error (config): invalid JSON in {config_path}: {exc}", err=True)
            sys.exit(EXIT_CODES["config"])
    for raw in overrides:
        key, value = _parse_override(raw)
        data[key] = value
    return data


@main.command("gen-data")
@click.option("--out", "out_dir", required=True)
@click.option("--seed", default=0, type=int)
@click.option("--corruption-strength", default=1.0, type=float)
@click.option("--n-train", default=2000, type=int)
@click.option("--n-val", default=500, type=int)
@click.option("--image-size", default=64, type=int)
@click.option("--num-classes", default=3, type=int)
@click.pass_context
def gen_data(ctx, out_dir, seed, corruption_strength, n_train, n_val, image_size, num_classes):
    """Generate the synthetic clear/foggy dataset."""
    body = _client(ctx).call(
        "/datasets/generate",
        {
            "out_dir": out_dir,
            "seed": seed,
            "corruption_strength": corruption_strength,
            "n_train": n_train,
            "n_val": n_val,
            "image_size": image_size,
            "num_classes": num_classes,
        },
    )
    click.echo(f"dataset written to {body['out_dir']} (generator v{body['generator_version']})")
    for split, count in sorted(body["splits"].items()):
        click.echo(f"  {split}: {count} images")


@main.command()
@click.option("--config", "config_path", default=None, help="JSON run config file.")
@click.option("--set", "overrides", multiple=True, help="Override a config key, e.g. --set iterations=500.")
@click.pass_context
def train(ctx, config_path, overrides):
    """Train a detector (optionally with domain adaptation)."""
    config = _load_config(config_path, overrides)
    body = _client(ctx).call("/runs/train", {"config": config})
    click.echo(f"checkpoint: {body['checkpoint_path']}")
    click.echo(f"log: {body['log_path']}")
    dc = f", l_dc={body['final_l_dc_avg']:.4f}" if body["final_l_dc_avg"] is not None else ""
    click.echo(f"final: l_det={body['final_l_det']:.4f}{dc}, l_t={body['final_l_t']:.4f}")


@main.command("eval")
@click.option("--weights", required=True)
@click.option("--data", "data_dir", required=True)
@click.option("--split", default="target_val")
@click.option("--iou", default=0.5, type=float)
@click.option("--conf-thresh", default=None, type=float)
@click.option("--min-gt-count", default=None, type=int)
@click.pass_context
def eval_cmd(ctx, weights, data_dir, split, iou, conf_thresh, min_gt_count):
    """Evaluate a checkpoint: per-class AP and mAP on a labeled split."""
    body = _client(ctx).call(
        "/evaluations",
        {
            "weights": weights,
            "data_dir": data_dir,
            "split": split,
            "iou": iou,
            "conf_thresh": conf_thresh,
            "min_gt_count": min_gt_count,
        },
    )
    click.echo(body["table"])


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--set", "overrides", multiple=True)
@click.option(
    "--subsets",
    default=None,
    help="Semicolon-separated scale subsets, e.g. 'none;f3;f1,f2;f1,f2,f3'. Default: all 8.",
)
@click.pass_context
def ablate(ctx, config_path, overrides, subsets):
    """Run the scale-subset ablation and print the checkmark table."""
    config = _load_config(config_path, overrides)
    parsed = None
    if subsets is not None:
        parsed = []
        for chunk in subsets.split(";"):
            chunk = chunk.strip()
            parsed.append([] if chunk in ("", "none") else [s.strip() for s in chunk.split(",")])
    body = _client(ctx).call("/ablations", {"config": config, "subsets": parsed})
    click.echo(body["table"])


@main.command()
@click.option("--checkpoint", required=True)
@click.option("--data", "data_dir", required=True)
@click.option("--seed", default=0, type=int)
@click.option("--pixels/--no-pixels", default=False, help="Also probe raw pixels.")
@click.pass_context
def probe(ctx, checkpoint, data_dir, seed, pixels):
    """Domain-confusion probe on frozen backbone features."""
    body = _client(ctx).call(
        "/probes",
        {"checkpoint": checkpoint, "data_dir": data_dir, "seed": seed, "include_pixels": pixels},
    )
    for name, acc in sorted(body["accuracies"].items()):
        click.echo(f"{name}: {acc:.4f}")
    click.echo(f"mean feature accuracy: {body['mean_feature_accuracy']:.4f}")
    click.echo(f"samples per domain: {body['counts']['source']}")


@main.command()
@click.option("--log", "log_path", required=True)
@click.option("--out", "out_dir", required=True)
@click.pass_context
def report(ctx, log_path, out_dir):
    """Export loss-curve CSVs from a training log."""
    body = _client(ctx).call("/reports", {"log_path": log_path, "out_dir": out_dir})
    for warning in body["warnings"]:
        click.echo(f"warning: {warning}", err=True)
    for path in body["files"]:
        click.echo(path)


@main.command()
@click.option("--checkpoint", required=True)
@click.option("--out", "out_path", required=True)
@click.pass_context
def export(ctx, checkpoint, out_path):
    """Export inference-only weights (adaptation network stripped)."""
    body = _client(ctx).call("/exports", {"checkpoint": checkpoint, "out_path": out_path})
    click.echo(f"exported {body['out_path']}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Run the service with uvicorn."""
    import uvicorn

    uvicorn.run("dadet.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
