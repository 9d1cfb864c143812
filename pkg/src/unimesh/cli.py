"""Command-line front end: train, generate, edit, caption, eval, augment, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .adapter import MeshHeadAdapter, init_recoverable
from .backends import build_backends
from .com import (
    EditError,
    EditSession,
    MeshParams,
    MeshStore,
    apply_edit,
    init_session,
)
from .latents import LatentSimulator
from .metrics import evaluate_captions, read_jsonl
from .reflexion import render_views, run_reflexion, select_views
from .sdf.mesh import mesh_from_obj
from .service import parse_config, serve_forever
from .training import TrainConfig, make_synthetic_dataset, train


@click.group()
def cli():
    """Desk-scale text-to-mesh pipeline tools."""


def _read_kv_config(path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise click.ClickException(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip().lower()] = val.strip()
    return values


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="key = value training config")
@click.option("--out", "out_path", type=click.Path(), required=True, help="adapter JSON output")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="optional training-report JSON output")
def train_cmd(config_path, out_path, report_path):
    """Train the adapter on the synthetic recoverable task."""
    raw = _read_kv_config(config_path) if config_path else {}
    sim_seed = int(raw.pop("sim_seed", 11))
    adapter_seed = int(raw.pop("adapter_seed", 7))
    n_shapes = int(raw.pop("n_shapes", 32))
    cfg_kwargs = {}
    for key, val in raw.items():
        if key in ("steps", "batch_size", "points_per_shape", "seed"):
            cfg_kwargs[key] = int(val)
        elif key in ("learning_rate", "noise_sigma", "adam_beta1", "adam_beta2", "adam_eps"):
            cfg_kwargs[key] = float(val)
        elif key in ("optimizer", "align_mode", "lr_schedule"):
            cfg_kwargs[key] = val
        elif key == "train_bias":
            cfg_kwargs[key] = val.lower() in ("1", "true", "yes")
        else:
            raise click.ClickException(f"unknown training config key {key!r}")
    cfg = TrainConfig(**cfg_kwargs)

    sim = LatentSimulator(seed=sim_seed, noise_sigma=cfg.noise_sigma)
    dataset = make_synthetic_dataset(sim, n_shapes, cfg.points_per_shape, seed=cfg.seed)
    adapter = init_recoverable(sim, seed=adapter_seed)
    report = train(adapter, dataset, cfg)
    adapter.save(out_path)
    if report_path:
        Path(report_path).write_text(json.dumps(report.to_json_dict()), encoding="utf-8")
    click.echo(f"final loss {report.final_loss:.6e} after {report.wall_steps} steps -> {out_path}")


cli.add_command(train_cmd, name="train")


def _load_cli_session(path) -> tuple[EditSession, dict]:
    data = json.loads(Path(path).read_text("utf-8"))
    meta = data.get("cli_meta") or {}
    return EditSession.from_json_dict(data), meta


def _save_cli_session(path, session: EditSession, meta: dict, store: MeshStore) -> None:
    path = Path(path)
    payload = session.to_json_dict()
    payload["cli_meta"] = meta
    mesh_dir = path.parent / "meshes"
    mesh_dir.mkdir(parents=True, exist_ok=True)
    for step in session.steps:
        blob = mesh_dir / f"{step.mesh_hash}.obj"
        if not blob.exists():
            blob.write_bytes(store.get(step.mesh_hash))
    path.write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")), encoding="utf-8")


def _store_from_cli_session(path, session: EditSession) -> MeshStore:
    store = MeshStore()
    mesh_dir = Path(path).parent / "meshes"
    for step in session.steps:
        store.put((mesh_dir / f"{step.mesh_hash}.obj").read_bytes())
    return store


@cli.command()
@click.option("--prompt", required=True)
@click.option("--adapter", "adapter_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True, help="mesh OBJ output")
@click.option("--session", "session_path", type=click.Path(), default=None,
              help="also record a replayable session JSON here")
@click.option("--sim-seed", type=int, default=11, show_default=True)
@click.option("--resolution", type=int, default=48, show_default=True)
def generate(prompt, adapter_path, out_path, session_path, sim_seed, resolution):
    """Generate a mesh from a prompt with the scripted text-to-latent backend."""
    adapter = MeshHeadAdapter.load(adapter_path)
    sim = LatentSimulator(seed=sim_seed)
    suite = build_backends("scripted", sim)
    store = MeshStore()
    session = init_session(prompt, suite.text_to_latent, adapter, store,
                           MeshParams(resolution=resolution))
    mesh_bytes = store.get(session.steps[0].mesh_hash)
    Path(out_path).write_bytes(mesh_bytes)
    if session_path:
        meta = {"adapter_path": str(adapter_path), "sim_seed": sim_seed, "resolution": resolution}
        _save_cli_session(session_path, session, meta, store)
        click.echo(f"session {session.id} -> {session_path}")
    click.echo(f"mesh {session.steps[0].mesh_hash[:12]} -> {out_path}")


@cli.command()
@click.option("--session", "session_path", type=click.Path(exists=True), required=True)
@click.option("--prompt", required=True)
def edit(session_path, prompt):
    """Apply a scripted edit to a recorded session."""
    session, meta = _load_cli_session(session_path)
    if not meta.get("adapter_path"):
        raise click.ClickException("session file lacks cli_meta.adapter_path")
    adapter = MeshHeadAdapter.load(meta["adapter_path"])
    sim = LatentSimulator(seed=int(meta.get("sim_seed", 11)))
    suite = build_backends("scripted", sim)
    store = _store_from_cli_session(session_path, session)
    try:
        apply_edit(session, prompt, suite.editor, adapter, store,
                   MeshParams(resolution=int(meta.get("resolution", 48))))
    except EditError as exc:
        raise click.ClickException(str(exc))
    _save_cli_session(session_path, session, meta, store)
    step = session.steps[-1]
    click.echo(f"step {step.index}: mesh {step.mesh_hash[:12]}")


@cli.command()
@click.option("--mesh", "mesh_path", type=click.Path(exists=True), required=True)
@click.option("--backend", "backend_mode", type=click.Choice(["scripted", "remote"]),
              default="scripted", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="service config (for remote backend URLs)")
@click.option("--max-iters", type=int, default=4, show_default=True)
def caption(mesh_path, backend_mode, config_path, max_iters):
    """Caption a mesh through the reflective captioning loop."""
    mesh = mesh_from_obj(Path(mesh_path).read_bytes())
    if mesh.is_empty:
        raise click.ClickException("mesh has no faces")
    urls = {}
    if backend_mode == "remote":
        if not config_path:
            raise click.UsageError("--backend remote requires --config with url_* entries")
        urls = parse_config(config_path).remote_urls
    sim = LatentSimulator(seed=0)
    suite = build_backends(backend_mode, sim, urls)
    views = render_views(mesh, 16, 128)
    chosen = [views[i] for i in select_views(views)]
    episode = run_reflexion(chosen, suite.captioner.for_mesh(mesh), few_shot=[], max_iters=max_iters)
    click.echo(json.dumps({"caption": episode.final_caption, "episode": episode.to_json_dict()}))


@cli.command(name="eval")
@click.option("--pred", "pred_path", type=click.Path(exists=True), required=True)
@click.option("--gt", "gt_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def eval_cmd(pred_path, gt_path, out_path):
    """Evaluate predicted captions (JSONL) against ground truth (JSONL)."""
    report = evaluate_captions(read_jsonl(pred_path), read_jsonl(gt_path))
    Path(out_path).write_text(json.dumps(report.to_json_dict(), indent=2), encoding="utf-8")
    click.echo(json.dumps(report.to_json_dict()))


@cli.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--mode", type=click.Choice(["shadow", "background"]), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def augment(in_path, mode, seed, out_path):
    """Apply a photorealistic augmentation to an RGBA PNG."""
    from .augment import drop_shadow, gradient_background, load_png, save_png

    img = load_png(in_path)
    out = drop_shadow(img, seed=seed) if mode == "shadow" else gradient_background(img, seed=seed)
    save_png(out, out_path)
    click.echo(f"{mode} -> {out_path}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
def serve(config_path):
    """Run the HTTP JSON service."""
    serve_forever(parse_config(config_path))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except click.Abort:
        click.echo("aborted", err=True)
        return 2
    except Exception as exc:  # runtime failure
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
