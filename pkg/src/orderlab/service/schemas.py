"""Request/response models for the pipeline service.

Paths in requests are interpreted on the machine running the service; the
default CLI client runs the service in-process, so they are local paths.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..tokenization import DEFAULT_SCHEME


class TrainRequest(BaseModel):
    corpus_path: str
    out_path: str
    order: int = Field(default=5, ge=1)
    scheme: str = DEFAULT_SCHEME
    min_count: int = Field(default=1, ge=1)


class TrainResponse(BaseModel):
    out_path: str
    manifest_path: str
    vocab_size: int
    ngram_counts: dict[str, int]
    discount_warnings: list[str] = []


class ScoreRequest(BaseModel):
    experiment_path: str
    out_path: str
    arpa_path: str | None = None
    external_file: str | None = None
    external_cmd: str | None = None
    backend_id: str | None = None
    scheme: str | None = None
    include_eos: bool = True
    strip_final_punct: bool = False
    eos_included_declared: bool | None = None


class ScoreResponse(BaseModel):
    out_path: str
    manifest_path: str
    backend_id: str
    rows: int
    oov_rate: float | None = None
    oov_cells: int | None = None


class AnalyzeRequest(BaseModel):
    experiment_path: str
    contrast_spec_path: str
    out_dir: str
    surprisal_paths: list[str] = []
    ratings_path: str | None = None
    seed: int = 0
    n_perm: int = Field(default=10000, ge=1)
    min_accuracy: float = Field(default=0.8, ge=0.0, le=1.0)
    require_native: bool = True


class AnalyzeResponse(BaseModel):
    out_dir: str
    outputs: list[str]
    sources: list[str]
    results: dict[str, dict]
    comparisons: list[dict]
    filter_report: dict | None = None


class ReportRequest(BaseModel):
    analysis_dir: str
    out_dir: str
    formats: list[str] = ["csv", "svg"]


class ReportResponse(BaseModel):
    out_dir: str
    outputs: list[str]
    figures: list[str]
    bars: int


class SynthRequest(BaseModel):
    out_dir: str
    spec_path: str | None = None
    spec: dict | None = None


class SynthResponse(BaseModel):
    out_dir: str
    written: dict[str, str]
    seed: int


class SentencesRequest(BaseModel):
    arpa_path: str
    sentences: list[str]
    scheme: str | None = None
    include_eos: bool = True


class SentenceScore(BaseModel):
    sentence: str
    tokens: list[str]
    surprisal_bits: list[float]
    total_bits: float


class SentencesResponse(BaseModel):
    backend_id: str
    results: list[SentenceScore]


class HealthResponse(BaseModel):
    status: str
    version: str
