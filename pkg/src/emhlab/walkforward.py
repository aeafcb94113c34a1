"""Daily retrain-predict-reincorporate loop with no look-ahead.

For each test day t the model is fitted on every feature row strictly
before t, predicts day t, and day t's realized label then joins the
training set for day t+1.  Nothing dated after t can influence the
day-t record; on continuous features even the standardization is refit
each day on the training rows only.  A fit failure on some day (for
example K exceeding the training rows) degrades to a logged "up"
prediction rather than aborting the run, and erroneous predictions are
fed forward as-is.

LOG and SVM models warm-start from the previous day's fit where the
training prefix is unchanged (always true for trend features); this
changes runtime, not results, since both trainers converge to the same
tolerance either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classifiers import Dataset, ModelSpec, Scaler, fit_model
from .metrics import ConfusionMatrix

LOG_COLUMNS = ("date", "predicted", "actual", "train_size", "flag")
MODES = ("continuous", "trend")


class WalkForwardError(ValueError):
    """Raised on invalid configuration or tables too short to test."""


@dataclass(frozen=True)
class WalkForwardConfig:
    spec: ModelSpec
    mode: str = "trend"
    initial_training_days: int = 250
    refit_every: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise WalkForwardError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.initial_training_days < 50:
            raise WalkForwardError(
                f"initial_training_days must be >= 50, got {self.initial_training_days}")
        if self.refit_every < 1:
            raise WalkForwardError(f"refit_every must be >= 1, got {self.refit_every}")
        self.spec.validate()


@dataclass
class PredictionLog:
    ticker: Optional[str]
    spec_label: str
    mode: str
    dates: list
    predicted: np.ndarray
    actual: np.ndarray
    train_size: np.ndarray
    flags: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def accuracy(self) -> float:
        return float((self.predicted == self.actual).mean())

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(LOG_COLUMNS) + "\n")
            for i in range(len(self.dates)):
                fh.write(f"{self.dates[i]},{int(self.predicted[i])},"
                         f"{int(self.actual[i])},{int(self.train_size[i])},"
                         f"{self.flags[i]}\n")

    @classmethod
    def from_csv(cls, path, ticker: Optional[str] = None,
                 spec_label: str = "", mode: str = "") -> "PredictionLog":
        dates, pred, act, size, flags = [], [], [], [], []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header.split(",") != list(LOG_COLUMNS):
                raise WalkForwardError(f"unexpected prediction log header: {header!r}")
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 5:
                    raise WalkForwardError(f"malformed prediction log row: {line!r}")
                dates.append(parts[0])
                pred.append(int(parts[1]))
                act.append(int(parts[2]))
                size.append(int(parts[3]))
                flags.append(parts[4])
        return cls(ticker=ticker, spec_label=spec_label, mode=mode, dates=dates,
                   predicted=np.array(pred, dtype=np.int8),
                   actual=np.array(act, dtype=np.int8),
                   train_size=np.array(size, dtype=np.int64), flags=flags)


def run_walk_forward(table, config: WalkForwardConfig,
                     ticker: Optional[str] = None) -> PredictionLog:
    """Run one (security, spec) walk-forward over a feature table."""
    X = np.ascontiguousarray(table.X, dtype=np.float64)
    y = np.asarray(table.y, dtype=np.int8)
    n = X.shape[0]
    start = config.initial_training_days
    if n <= start + 1:
        raise WalkForwardError(
            f"table has {n} rows; need more than initial_training_days + 1 = {start + 1}")

    scale = config.mode == "continuous"
    tick = ticker if ticker is not None else getattr(table, "ticker", None)

    dates, preds, acts, sizes, flags = [], [], [], [], []
    model = None
    scaler = None
    for i in range(start, n):
        if model is None or (i - start) % config.refit_every == 0:
            if scale:
                scaler = Scaler.fit(X[:i])
                X_train = scaler.transform(X[:i])
            else:
                X_train = X[:i]
            try:
                model = fit_model(config.spec, Dataset(X_train, y[:i]), warm=model)
            except Exception as exc:
                model = None
                flag = f"fit_error:{type(exc).__name__}"
                pred = 1
            else:
                flag = model.flag or ""
                query = scaler.transform(X[i:i + 1]) if scale else X[i:i + 1]
                pred = int(model.predict(query)[0])
        else:
            flag = model.flag or ""
            query = scaler.transform(X[i:i + 1]) if scale else X[i:i + 1]
            pred = int(model.predict(query)[0])

        dates.append(str(table.dates[i]))
        preds.append(pred)
        acts.append(int(y[i]))
        sizes.append(i)
        flags.append(flag)

    return PredictionLog(
        ticker=tick, spec_label=config.spec.label(), mode=config.mode,
        dates=dates,
        predicted=np.array(preds, dtype=np.int8),
        actual=np.array(acts, dtype=np.int8),
        train_size=np.array(sizes, dtype=np.int64),
        flags=flags,
    )


def summarize(log: PredictionLog) -> ConfusionMatrix:
    """Tally the log into a confusion matrix with "up" as positive."""
    if len(log) == 0:
        raise WalkForwardError("cannot summarize an empty prediction log")
    p, a = log.predicted, log.actual
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (a == 1))),
        fp=int(np.sum((p == 1) & (a == 0))),
        fn=int(np.sum((p == 0) & (a == 1))),
        tn=int(np.sum((p == 0) & (a == 0))),
    )
