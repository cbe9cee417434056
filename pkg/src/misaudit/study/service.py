"""HTTP service backing the annotation frontend.

Session state is server-driven: the client only ever asks for the next task
and posts answers, so a reload resumes wherever the store says the annotator
left off. Each annotator works through their group's single-modality
condition for every question before the combined condition unlocks.
"""

import posixpath
import time

from fastapi import FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..dataset import FRAME_LIMIT_VIDEO_WITH_SUBTITLE, frame_plan, subtitle_window
from ..errors import DomainError
from .records import AnnotationRecord, RecordStore, StudyDefinition

VIDEO_MODALITY = "video"

STAGE_SINGLE = "single"
STAGE_COMBINED = "combined"


class AnswerBody(BaseModel):
    question_id: str
    condition: str
    choice: int = Field(ge=0)
    confidence: int = Field(ge=1, le=5)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


class _StudyState:
    """Pure study bookkeeping, independent of the web framework."""

    def __init__(self, study: StudyDefinition, bundle, store: RecordStore):
        self.study = study
        self.bundle = bundle
        self.store = store
        self.registry = study.registry()
        self.full_condition = self.registry.full_set()
        self.questions = {q.question_id: q for q in bundle.questions}
        missing = [qid for qid in study.question_ids if qid not in self.questions]
        if missing:
            raise DomainError(f"study references unknown questions: {missing}")
        self.annotators = set(study.assignment.annotators())
        # one live session token per annotator; latest claim wins
        self.sessions: dict[str, str] = {}

    def task_sequence(self, annotator_id: str):
        first = self.study.assignment.first_condition_of(annotator_id)
        for qid in self.study.question_ids:
            yield qid, first, STAGE_SINGLE
        for qid in self.study.question_ids:
            yield qid, self.full_condition, STAGE_COMBINED

    def answered_keys(self, annotator_id: str) -> set[tuple[str, int]]:
        return {
            (r.question_id, r.condition.mask)
            for r in self.store.records()
            if r.annotator_id == annotator_id
        }

    def next_task(self, annotator_id: str):
        answered = self.answered_keys(annotator_id)
        for qid, condition, stage in self.task_sequence(annotator_id):
            if (qid, condition.mask) not in answered:
                return qid, condition, stage
        return None

    def singles_done(self, annotator_id: str) -> bool:
        first = self.study.assignment.first_condition_of(annotator_id)
        answered = self.answered_keys(annotator_id)
        return all(
            (qid, first.mask) in answered for qid in self.study.question_ids
        )

    def progress_of(self, annotator_id: str) -> dict:
        answered = self.answered_keys(annotator_id)
        total = 2 * len(self.study.question_ids)
        return {"answered": len(answered), "total": total}

    def condition_payload(self, question, condition) -> dict:
        """Exactly the assigned modalities, nothing else."""
        assets = self.bundle.clip_for(question)
        names = [self.registry.names[i] for i in condition.indices()]
        payload: dict = {}
        if VIDEO_MODALITY in names:
            plan = frame_plan(
                assets, question.window, FRAME_LIMIT_VIDEO_WITH_SUBTITLE
            )
            payload["frames"] = [
                {
                    "url": "/frames/{}/{}".format(
                        assets.clip_id,
                        posixpath.basename(assets.frames[i].relative_path),
                    ),
                    "timestamp": assets.frames[i].timestamp,
                }
                for i in plan.frame_indices
            ]
        if any(name != VIDEO_MODALITY for name in names):
            payload["subtitle_text"] = subtitle_window(assets, question.window)
        return payload

    def frame_file(self, clip_id: str, filename: str):
        if filename != posixpath.basename(filename) or filename.startswith("."):
            return None
        assets = self.bundle.assets.get(clip_id)
        if assets is None:
            return None
        for ref in assets.frames:
            if posixpath.basename(ref.relative_path) == filename:
                return assets.frame_path(ref)
        return None


def create_app(
    study: StudyDefinition,
    bundle,
    store: RecordStore,
    *,
    admin_token: str | None = None,
    frontend_dir=None,
) -> FastAPI:
    state = _StudyState(study, bundle, store)
    app = FastAPI(title="misaudit study")
    app.state.study = state

    @app.exception_handler(RequestValidationError)
    async def _validation_to_400(request: Request, exc: RequestValidationError):
        return _error(400, str(exc.errors()))

    def _check_session(annotator_id: str, session_id: str | None):
        """Latest X-Session-Id claim wins; stale tokens get rejected."""
        if session_id is None:
            return None
        current = state.sessions.get(annotator_id)
        if current is not None and current != session_id:
            return _error(409, "session superseded by a newer login")
        return None

    @app.get("/api/session/{annotator_id}/next")
    def next_task(
        annotator_id: str, x_session_id: str | None = Header(default=None)
    ):
        if annotator_id not in state.annotators:
            return _error(404, f"unknown annotator {annotator_id!r}")
        if x_session_id is not None:
            # a fresh login claims the session, invalidating any other tab
            state.sessions[annotator_id] = x_session_id
        task = state.next_task(annotator_id)
        progress = state.progress_of(annotator_id)
        if task is None:
            return {"done": True, "progress": progress}
        qid, condition, stage = task
        question = state.questions[qid]
        return {
            "done": False,
            "question_id": qid,
            "question": question.text,
            "choices": list(question.choices),
            "condition": condition.label(state.registry),
            "stage": stage,
            "progress": progress,
            "payload": state.condition_payload(question, condition),
        }

    @app.post("/api/session/{annotator_id}/answer")
    def submit_answer(
        annotator_id: str,
        body: AnswerBody,
        x_session_id: str | None = Header(default=None),
    ):
        if annotator_id not in state.annotators:
            return _error(404, f"unknown annotator {annotator_id!r}")
        stale = _check_session(annotator_id, x_session_id)
        if stale is not None:
            return stale
        if body.question_id not in state.study.question_ids:
            return _error(400, f"question {body.question_id!r} not in this study")
        try:
            condition = state.registry.parse_label(body.condition)
        except DomainError as exc:
            return _error(400, str(exc))
        question = state.questions[body.question_id]
        if body.choice >= len(question.choices):
            return _error(
                400,
                f"choice {body.choice} out of range for "
                f"{len(question.choices)} options",
            )
        first = state.study.assignment.first_condition_of(annotator_id)
        if condition == state.full_condition:
            if not state.singles_done(annotator_id):
                return _error(
                    409, "finish the single-modality stage before combined"
                )
        elif condition != first:
            return _error(
                409,
                f"condition {body.condition!r} is not assigned to "
                f"{annotator_id!r}",
            )
        record = AnnotationRecord(
            annotator_id=annotator_id,
            question_id=body.question_id,
            condition=condition,
            chosen_index=body.choice,
            confidence=body.confidence,
            submitted_at=time.time(),
        )
        state.store.add(record)
        nxt = state.next_task(annotator_id)
        return {
            "accepted": True,
            "progress": state.progress_of(annotator_id),
            "done": nxt is None,
        }

    @app.get("/api/progress")
    def progress():
        return {
            "annotators": {
                annotator: state.progress_of(annotator)
                for annotator in sorted(state.annotators)
            },
            "records": len(state.store),
        }

    @app.get("/api/admin/export")
    def export(authorization: str | None = Header(default=None)):
        if admin_token is None or authorization != f"Bearer {admin_token}":
            return _error(401, "admin token required")
        return {
            "schema": "misaudit/study-export@1",
            "records": [r.to_record() for r in state.store.records()],
        }

    @app.get("/frames/{clip_id}/{filename}")
    def frame(clip_id: str, filename: str):
        path = state.frame_file(clip_id, filename)
        if path is None or not path.exists():
            return _error(404, "no such frame")
        return FileResponse(path)

    if frontend_dir is not None:
        app.mount(
            "/", StaticFiles(directory=str(frontend_dir), html=True), name="ui"
        )
    return app
