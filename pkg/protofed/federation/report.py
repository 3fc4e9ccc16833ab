""" Training report models """

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from ..errors import UndefinedMetricError
from ..metrics import ConfusionCounts, client_metrics, macro_means, round_averaged

RECORD_TIMING_FIELDS = {'wall_time'}


class ClientRoundRecord(BaseModel):
    round: int
    client_id: int
    epoch_losses: List[float] = Field(default_factory=list)
    mean_loss: Optional[float] = None
    supervised_loss: Optional[float] = None
    prototype_loss: Optional[float] = None
    lam: float = 0.0
    n_train: int = 0
    upload_bytes: int = 0
    download_bytes: int = 0
    wall_time: float = 0.0
    single_class: bool = False
    excluded: bool = False
    attempts: int = 1
    error: Optional[str] = None
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    precision: Optional[float] = None
    recall: Optional[float] = None
    fbeta: Optional[float] = None
    ba: Optional[float] = None

    def set_confusion(self, counts: ConfusionCounts):
        self.tp, self.tn, self.fp, self.fn = counts.tp, counts.tn, counts.fp, counts.fn
        try:
            row = client_metrics(counts)
        except UndefinedMetricError:
            self.precision = self.recall = self.fbeta = self.ba = None
            return
        self.precision, self.recall, self.fbeta, self.ba = row.precision, row.recall, row.fbeta, row.ba


class RoundSummary(BaseModel):
    round: int
    participants: int
    mfbeta: Optional[float] = None
    mba: Optional[float] = None
    objective: Optional[float] = None
    global_prototypes: Optional[Dict] = None


class ReportSummary(BaseModel):
    rounds: int = 0
    final_mfbeta: Optional[float] = None
    final_mba: Optional[float] = None
    avg_mfbeta: Optional[float] = None
    avg_mba: Optional[float] = None
    mean_upload_bytes: float = 0.0
    mean_download_bytes: float = 0.0
    single_class_clients: List[int] = Field(default_factory=list)
    excluded: int = 0


class TrainReport(BaseModel):
    """One record per (round, client) plus a summary per round."""

    mode: str
    rounds: List[RoundSummary] = Field(default_factory=list)
    records: List[ClientRoundRecord] = Field(default_factory=list)
    summary: ReportSummary = Field(default_factory=ReportSummary)

    def round_records(self, round_: int) -> List[ClientRoundRecord]:
        return [record for record in self.records if record.round == round_]

    def close_round(self, round_: int, objective: Optional[float], global_prototypes: Optional[Dict]) -> RoundSummary:
        records = [r for r in self.round_records(round_) if not r.excluded]
        scored = [(r.fbeta, r.ba) for r in records if r.fbeta is not None and r.ba is not None]
        mfbeta, mba = macro_means(scored) if scored else (None, None)
        summary = RoundSummary(
            round=round_, participants=len(records), mfbeta=mfbeta, mba=mba,
            objective=objective, global_prototypes=global_prototypes,
        )
        self.rounds.append(summary)
        return summary

    def finalize(self) -> ReportSummary:
        scored = [(r.mfbeta, r.mba) for r in self.rounds if r.mfbeta is not None]
        kept = [r for r in self.records if not r.excluded]
        summary = ReportSummary(rounds=len(self.rounds))
        if scored:
            summary.final_mfbeta, summary.final_mba = scored[-1]
            summary.avg_mfbeta, summary.avg_mba = round_averaged(scored)
        if kept:
            summary.mean_upload_bytes = sum(r.upload_bytes for r in kept) / len(kept)
            summary.mean_download_bytes = sum(r.download_bytes for r in kept) / len(kept)
        summary.single_class_clients = sorted({r.client_id for r in self.records if r.single_class})
        summary.excluded = sum(1 for r in self.records if r.excluded)
        self.summary = summary
        return summary

    def comparable(self) -> dict:
        """The report without wall-clock timings."""
        return self.model_dump(exclude={'records': {'__all__': RECORD_TIMING_FIELDS}})

    def metric_rows(self) -> List[dict]:
        rows = []
        for summary in self.rounds:
            for record in sorted(self.round_records(summary.round), key=lambda r: r.client_id):
                rows.append({
                    'round': record.round, 'client': record.client_id,
                    'tp': record.tp, 'tn': record.tn, 'fp': record.fp, 'fn': record.fn,
                    'precision': record.precision, 'recall': record.recall,
                    'fbeta': record.fbeta, 'ba': record.ba,
                })
            rows.append({'round': summary.round, 'client': 'mean', 'fbeta': summary.mfbeta, 'ba': summary.mba})
        return rows

    def trajectory_rows(self) -> List[dict]:
        rows = []
        for record in sorted(self.records, key=lambda r: (r.round, r.client_id)):
            for epoch, loss in enumerate(record.epoch_losses, start=1):
                rows.append({
                    'round': record.round, 'client': record.client_id, 'epoch': epoch,
                    'loss': loss, 'ba': record.ba, 'fbeta': record.fbeta,
                })
        return rows


METRIC_COLUMNS = ['round', 'client', 'tp', 'tn', 'fp', 'fn', 'precision', 'recall', 'fbeta', 'ba']
TRAJECTORY_COLUMNS = ['round', 'client', 'epoch', 'loss', 'ba', 'fbeta']
