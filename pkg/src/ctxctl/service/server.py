"""The steering service: a websocket endpoint speaking the wire protocol,
a static geometry endpoint, and static file serving for the browser UI.

One session per server; every connected client receives the same frame
sequence.  Client messages (set_mode / pause / resume / reset) are queued
into the session and take effect at the next integration step boundary.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, JSONResponse

from ctxctl.service.session import SteeringSession


def build_app(loaded, pace: float = 1.0, background: bool = True,
              ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="ctxctl steering service")
    session = SteeringSession(loaded, pace=pace)
    app.state.session = session
    if background:
        session.run_background()

    @app.get("/geometry")
    def geometry():
        return JSONResponse(session.geometry())

    @app.websocket("/ws")
    async def ws(socket: WebSocket):
        await socket.accept()
        import anyio

        cursor = 0
        stop = False

        async def sender():
            nonlocal cursor
            while not stop:
                frames, cursor2 = await anyio.to_thread.run_sync(
                    session.frames_since, cursor, 0.2)
                cursor = cursor2
                for frame in frames:
                    await socket.send_text(json.dumps(frame, sort_keys=True))

        async def receiver():
            nonlocal stop
            while True:
                try:
                    raw = await socket.receive_text()
                except WebSocketDisconnect:
                    stop = True
                    return
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    session._emit({"type": "error", "message": "malformed frame"})
                    continue
                session.submit(msg)

        async with anyio.create_task_group() as tg:
            tg.start_soon(sender)
            await receiver()
            tg.cancel_scope.cancel()

    if ui_dir and ui_dir.exists():
        @app.get("/")
        def index():
            return FileResponse(ui_dir / "index.html")

        @app.get("/{asset}")
        def asset(asset: str):
            target = (ui_dir / asset).resolve()
            if ui_dir.resolve() not in target.parents or not target.exists():
                return JSONResponse({"error": "not found"}, status_code=404)
            return FileResponse(target)
    return app


def run_server(artifacts_dir, host="127.0.0.1", port=8700, pace=1.0) -> int:
    import sys

    import uvicorn

    from ctxctl.service.artifacts import load_artifacts

    try:
        loaded = load_artifacts(artifacts_dir)
    except (OSError, ValueError, KeyError) as err:
        print(f"artifact error: {err}", file=sys.stderr)
        return 3
    ui_dir = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    app = build_app(loaded, pace=pace, ui_dir=ui_dir if ui_dir.exists() else None)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as err:
        print(f"cannot bind {host}:{port}: {err}", file=sys.stderr)
        return 3
    return 0
