"""HTTP/JSON backend for the browser explorer.

Serves completed result files read-only, lists datasets, and queues new
runs (one engine execution at a time; bootstrap runs already saturate the
workers).  Result files are never mutated once written.
"""

from __future__ import annotations

import queue
import threading
import traceback
from pathlib import Path

import pandas as pd
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles

from .config import ConfigError, RunConfig
from .fence import run_af
from .serialize import af_to_dict, read_json, vis_to_dict, write_json
from .stability import run_vis, rv_rng


class RunRegistry:
    """Tracks queued/running/done runs; completed files live on disk."""

    def __init__(self, results_dir: Path):
        self.results_dir = Path(results_dir)
        self.results_dir.mkdir(parents=True, exist_ok=True)
        self.status: dict = {}
        self.errors: dict = {}
        self.queue: queue.Queue = queue.Queue()
        self.lock = threading.RLock()  # submit() checks state while holding it
        self.worker = threading.Thread(target=self._drain, daemon=True)
        self.worker.start()

    def known_ids(self):
        ids = set(self.status)
        for sub in self.results_dir.iterdir() if self.results_dir.exists() else ():
            if sub.is_dir() and ((sub / "vis.json").exists() or (sub / "af.json").exists()):
                ids.add(sub.name)
        return ids

    def state_of(self, run_id: str):
        with self.lock:
            if run_id in self.status:
                return self.status[run_id]
        sub = self.results_dir / run_id
        if (sub / "vis.json").exists() or (sub / "af.json").exists():
            return "done"
        return None

    def submit(self, run_id: str, cfg: RunConfig):
        with self.lock:
            if self.state_of(run_id) is not None:
                raise KeyError(run_id)
            self.status[run_id] = "queued"
        self.queue.put((run_id, cfg))

    def _drain(self):
        while True:
            run_id, cfg = self.queue.get()
            with self.lock:
                self.status[run_id] = "running"
            try:
                self._execute(run_id, cfg)
                with self.lock:
                    self.status[run_id] = "done"
            except Exception as exc:  # noqa: BLE001 - surfaced via status
                with self.lock:
                    self.status[run_id] = "failed"
                    self.errors[run_id] = f"{type(exc).__name__}: {exc}"
                traceback.print_exc()

    def _execute(self, run_id: str, cfg: RunConfig):
        d = cfg.load_dataset()
        out = self.results_dir / run_id
        if cfg.command == "vis":
            v = run_vis(d, B=cfg.B, nbest=cfg.nbest, redundant=cfg.redundant,
                        seed=cfg.seed, cores=cfg.cores)
            write_json(vis_to_dict(v, cfg.echo(v.dataset)), out / "vis.json")
        else:
            if cfg.redundant:
                from .dataset import add_redundant_variable

                d = add_redundant_variable(d, rv_rng(cfg.seed))
            a = run_af(d, B=cfg.B, n_c=cfg.n_c, c_max=cfg.c_max,
                       initial_stepwise=cfg.initial_stepwise, seed=cfg.seed, cores=cfg.cores)
            write_json(af_to_dict(a, cfg.echo(a.dataset)), out / "af.json")


def _config_from_body(body: dict, command: str) -> tuple[str, RunConfig]:
    body = dict(body)
    run_id = str(body.pop("id", "") or "").strip()
    if not run_id:
        import uuid

        run_id = uuid.uuid4().hex[:12]
    allowed = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(body) - allowed
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    cfg = RunConfig(command=command, **body)
    cfg.validate()
    return run_id, cfg


def create_app(results_dir: Path, data_dir: Path | None = None, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="modelscope", version="0.1.0")
    registry = RunRegistry(Path(results_dir))
    data_dir = Path(data_dir) if data_dir else None

    @app.get("/api/runs")
    def list_runs():
        out = []
        for run_id in sorted(registry.known_ids()):
            sub = registry.results_dir / run_id
            out.append({
                "id": run_id,
                "status": registry.state_of(run_id),
                "kinds": [k for k in ("vis", "af") if (sub / f"{k}.json").exists()],
            })
        return out

    @app.get("/api/runs/{run_id}/status")
    def run_status(run_id: str):
        state = registry.state_of(run_id)
        if state is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        body = {"id": run_id, "status": state}
        if run_id in registry.errors:
            body["error"] = registry.errors[run_id]
        return body

    def _result(run_id: str, kind: str):
        path = registry.results_dir / run_id / f"{kind}.json"
        if not path.exists():
            raise HTTPException(404, f"no {kind} result for run {run_id!r}")
        return read_json(path)

    @app.get("/api/vis/{run_id}")
    def get_vis(run_id: str):
        return _result(run_id, "vis")

    @app.get("/api/af/{run_id}")
    def get_af(run_id: str):
        return _result(run_id, "af")

    @app.get("/api/dataset/{name}/columns")
    def dataset_columns(name: str):
        if data_dir is None:
            raise HTTPException(404, "no dataset directory configured")
        path = data_dir / f"{name}.csv"
        if not path.exists():
            raise HTTPException(404, f"unknown dataset {name!r}")
        frame = pd.read_csv(path, nrows=1)
        return {"name": name, "columns": list(frame.columns)}

    def _submit(body: dict, command: str):
        try:
            run_id, cfg = _config_from_body(body, command)
        except (ConfigError, TypeError) as exc:
            raise HTTPException(422, str(exc)) from exc
        try:
            registry.submit(run_id, cfg)
        except KeyError:
            raise HTTPException(409, f"run id {run_id!r} already exists") from None
        return {"id": run_id, "status": "queued"}

    @app.post("/api/vis")
    def post_vis(body: dict):
        return _submit(body, "vis")

    @app.post("/api/af")
    def post_af(body: dict):
        return _submit(body, "af")

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
