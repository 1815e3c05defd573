"""FastAPI application wrapping the pipeline.

Error mapping: DataError -> 400, UsageError -> 422 (like request validation),
anything else -> 500. Loaded ARPA models are cached by (path, mtime, size)
so repeated sentence scoring against one model stays cheap.
"""

from __future__ import annotations

import os
from collections import OrderedDict

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from ..errors import DataError, OrderlabError, UsageError
from ..ngram import read_arpa
from ..ngram.model import NgramModel
from ..scoring import NativeNgramBackend
from ..tokenization import DEFAULT_SCHEME
from . import schemas

app = FastAPI(
    title="orderlab",
    version=__version__,
    description="Word-order preference measurement pipeline: train, score, analyze, report.",
)

_MODEL_CACHE: OrderedDict[tuple, NgramModel] = OrderedDict()
_MODEL_CACHE_SIZE = 4


@app.exception_handler(DataError)
async def _data_error(request: Request, exc: DataError):
    return JSONResponse(status_code=400, content={"detail": {"kind": "data", "message": str(exc)}})


@app.exception_handler(UsageError)
async def _usage_error(request: Request, exc: UsageError):
    return JSONResponse(status_code=422, content={"detail": {"kind": "usage", "message": str(exc)}})


@app.exception_handler(OrderlabError)
async def _other_error(request: Request, exc: OrderlabError):
    return JSONResponse(status_code=500, content={"detail": {"kind": "internal", "message": str(exc)}})


def _cached_model(path: str, scheme: str) -> NgramModel:
    try:
        stat = os.stat(path)
    except OSError as exc:
        raise DataError(f"cannot read ARPA file {path}: {exc}") from exc
    key = (os.path.abspath(path), stat.st_mtime_ns, stat.st_size, scheme)
    if key in _MODEL_CACHE:
        _MODEL_CACHE.move_to_end(key)
        return _MODEL_CACHE[key]
    model = read_arpa(path, scheme=scheme)
    _MODEL_CACHE[key] = model
    while len(_MODEL_CACHE) > _MODEL_CACHE_SIZE:
        _MODEL_CACHE.popitem(last=False)
    return model


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/train", response_model=schemas.TrainResponse)
def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    result = pipeline.run_train(
        corpus_path=req.corpus_path,
        out_path=req.out_path,
        order=req.order,
        scheme=req.scheme,
        min_count=req.min_count,
    )
    return schemas.TrainResponse(**result)


@app.post("/score", response_model=schemas.ScoreResponse)
def score(req: schemas.ScoreRequest) -> schemas.ScoreResponse:
    result = pipeline.run_score(
        experiment_path=req.experiment_path,
        out_path=req.out_path,
        arpa_path=req.arpa_path,
        external_file=req.external_file,
        external_cmd=req.external_cmd,
        backend_id=req.backend_id,
        scheme=req.scheme,
        include_eos=req.include_eos,
        strip_final_punct=req.strip_final_punct,
        eos_included_declared=req.eos_included_declared,
    )
    return schemas.ScoreResponse(**result)


@app.post("/score/sentences", response_model=schemas.SentencesResponse)
def score_sentences(req: schemas.SentencesRequest) -> schemas.SentencesResponse:
    model = _cached_model(req.arpa_path, req.scheme or DEFAULT_SCHEME)
    backend = NativeNgramBackend(model, include_eos=req.include_eos)
    results = []
    for i, sentence in enumerate(req.sentences):
        pts = backend.score_sentence(sentence, f"adhoc::{i}")
        results.append(
            schemas.SentenceScore(
                sentence=sentence,
                tokens=list(pts.tokens),
                surprisal_bits=list(pts.surprisal_bits),
                total_bits=pts.total_bits,
            )
        )
    return schemas.SentencesResponse(backend_id=backend.backend_id, results=results)


@app.post("/analyze", response_model=schemas.AnalyzeResponse)
def analyze(req: schemas.AnalyzeRequest) -> schemas.AnalyzeResponse:
    result = pipeline.run_analyze(
        experiment_path=req.experiment_path,
        surprisal_paths=req.surprisal_paths,
        contrast_spec_path=req.contrast_spec_path,
        out_dir=req.out_dir,
        ratings_path=req.ratings_path,
        seed=req.seed,
        n_perm=req.n_perm,
        min_accuracy=req.min_accuracy,
        require_native=req.require_native,
    )
    return schemas.AnalyzeResponse(**result)


@app.post("/report", response_model=schemas.ReportResponse)
def report(req: schemas.ReportRequest) -> schemas.ReportResponse:
    result = pipeline.run_report(
        analysis_dir=req.analysis_dir, out_dir=req.out_dir, formats=req.formats
    )
    return schemas.ReportResponse(**result)


@app.post("/synth", response_model=schemas.SynthResponse)
def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    result = pipeline.run_synth(
        out_dir=req.out_dir, spec_path=req.spec_path, spec_data=req.spec
    )
    return schemas.SynthResponse(**result)
