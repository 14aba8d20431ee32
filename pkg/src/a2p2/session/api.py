"""HTTP and websocket surface over the session service.

All payloads are JSON; timestamps are ISO-8601 with milliseconds. The
stream endpoint replays the existing event log on connect and then mirrors
new events as they land, so a reconnecting client can always rebuild its
view from scratch.
"""

from __future__ import annotations

import asyncio
import json
from typing import Any

from fastapi import FastAPI, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse
from pydantic import BaseModel

from .. import errors
from .service import SessionService

_ERROR_STATUS = {
    errors.UnknownSession: 404,
    errors.UnknownStep: 404,
    errors.UnknownNode: 404,
    errors.UnknownGoal: 404,
    errors.SessionClosed: 409,
    errors.MissingSlot: 409,
    errors.NoTurns: 409,
    errors.ValidationError: 422,
}


class CreateSession(BaseModel):
    profile: dict
    condition: str
    seed: int
    at: str | None = None
    session_number: int = 1


class ClientMessage(BaseModel):
    text: str
    at: str | None = None


class ProviderMessage(BaseModel):
    text: str
    suggestion_id: str | None = None
    goal_ids: list[str] | None = None
    at: str | None = None


class StepComplete(BaseModel):
    step: str
    at: str | None = None


def create_app(service: SessionService, console_html: str | None = None) -> FastAPI:
    app = FastAPI(title="a2p2 session service")
    app.state.service = service

    @app.exception_handler(errors.A2P2Error)
    async def _a2p2_error(_request: Any, exc: errors.A2P2Error) -> JSONResponse:
        status = _ERROR_STATUS.get(type(exc), 400)
        return JSONResponse(status_code=status, content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True}

    @app.post("/sessions")
    def create_session(body: CreateSession) -> dict:
        session_id = service.create_session(
            body.profile, body.condition, body.seed, at=body.at, session_number=body.session_number
        )
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/client-message")
    def client_message(session_id: str, body: ClientMessage) -> dict:
        return service.post_client_message(session_id, body.text, at=body.at)

    @app.get("/sessions/{session_id}/suggestions")
    def suggestions(session_id: str, step: str = Query(...)) -> dict:
        return service.get_suggestions(session_id, step)

    @app.get("/sessions/{session_id}/goals")
    def goals(session_id: str, at: str | None = Query(default=None)) -> dict:
        return service.present_goals(session_id, at=at)

    @app.post("/sessions/{session_id}/provider-message")
    def provider_message(session_id: str, body: ProviderMessage) -> dict:
        return service.post_provider_message(
            session_id, body.text, suggestion_id=body.suggestion_id, goal_ids=body.goal_ids, at=body.at
        )

    @app.post("/sessions/{session_id}/step-complete")
    def step_complete(session_id: str, body: StepComplete) -> dict:
        return service.complete_step(session_id, body.step, at=body.at)

    @app.get("/sessions/{session_id}/metrics")
    def metrics(session_id: str) -> dict:
        return service.get_metrics(session_id)

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str) -> dict:
        return service.get_state(session_id)

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str) -> dict:
        return service.get_record(session_id)

    if console_html:
        @app.get("/console", response_class=HTMLResponse)
        def console() -> str:
            return console_html

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str) -> None:
        await websocket.accept()
        try:
            record = service.get_record(session_id)
        except errors.UnknownSession:
            await websocket.send_json({"error": "UnknownSession"})
            await websocket.close()
            return

        loop = asyncio.get_running_loop()
        queue: asyncio.Queue = asyncio.Queue()

        def on_event(event: dict) -> None:
            loop.call_soon_threadsafe(queue.put_nowait, event)

        service.add_listener(session_id, on_event)
        try:
            for event in record["events"]:
                await websocket.send_json({"event": event})

            async def pump_outgoing() -> None:
                while True:
                    event = await queue.get()
                    await websocket.send_json({"event": event})

            async def pump_incoming() -> None:
                while True:
                    raw = await websocket.receive_text()
                    try:
                        frame = json.loads(raw)
                    except json.JSONDecodeError:
                        await websocket.send_json({"error": "BadFrame", "detail": "frames must be JSON"})
                        continue
                    try:
                        ack = _handle_frame(service, session_id, frame)
                    except errors.A2P2Error as exc:
                        ack = {"error": type(exc).__name__, "detail": str(exc)}
                    await websocket.send_json({"ack": ack, "ref": frame.get("ref")})

            outgoing = asyncio.ensure_future(pump_outgoing())
            incoming = asyncio.ensure_future(pump_incoming())
            try:
                done, pending = await asyncio.wait(
                    {outgoing, incoming}, return_when=asyncio.FIRST_COMPLETED
                )
                for task in pending:
                    task.cancel()
                for task in done:
                    exc = task.exception()
                    if exc and not isinstance(exc, WebSocketDisconnect):
                        raise exc
            finally:
                outgoing.cancel()
                incoming.cancel()
        except WebSocketDisconnect:
            pass
        finally:
            service.remove_listener(session_id, on_event)

    return app


def _handle_frame(service: SessionService, session_id: str, frame: dict) -> dict:
    kind = frame.get("kind")
    if kind == "client_message":
        return service.post_client_message(session_id, frame["text"], at=frame.get("at"))
    if kind == "provider_message":
        return service.post_provider_message(
            session_id,
            frame["text"],
            suggestion_id=frame.get("suggestion_id"),
            goal_ids=frame.get("goal_ids"),
            at=frame.get("at"),
        )
    if kind == "step_complete":
        return service.complete_step(session_id, frame["step"], at=frame.get("at"))
    return {"error": "UnknownFrameKind", "detail": str(kind)}
