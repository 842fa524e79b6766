"""Report documents: JSON (schema ``report-v1``) and TSV renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

from . import __version__

SCHEMA_ID = "report-v1"


def round_sig(x, digits: int = 6):
    """Round to ``digits`` significant digits; non-finite values pass through."""
    if x is None or not isinstance(x, (int, float)) or isinstance(x, bool):
        return x
    if x == 0 or not math.isfinite(x):
        return float(x)
    return float(f"{x:.{digits}g}")


@dataclass
class ReportRow:
    comparison: str
    dose: str
    raw_p: float
    adjusted_p: float
    significant: bool
    statistic: float | None = None
    df: float | None = None
    p_error_estimate: float = 0.0
    max_from: str = ""
    provenance: list = field(default_factory=list)
    flags: list = field(default_factory=list)


@dataclass
class ReportDocument:
    metadata: dict
    rows: list
    decision: dict
    warnings: list = field(default_factory=list)
    schema: str = SCHEMA_ID

    def to_dict(self, full_precision: bool = False) -> dict:
        d = asdict(self)
        if not full_precision:
            for r in d["rows"]:
                for key in ("raw_p", "adjusted_p", "statistic", "df", "p_error_estimate"):
                    r[key] = round_sig(r[key])
        for r in d["rows"]:
            for key in ("statistic", "df"):
                # JSON has no infinity
                if isinstance(r[key], float) and not math.isfinite(r[key]):
                    r[key] = None if math.isnan(r[key]) else ("inf" if r[key] > 0 else "-inf")
        return d

    def to_json(self, full_precision: bool = False) -> str:
        return json.dumps(self.to_dict(full_precision), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ReportDocument":
        rows = []
        for r in d["rows"]:
            r = dict(r)
            for key in ("statistic", "df"):
                if r.get(key) in ("inf", "-inf"):
                    r[key] = float(r[key])
            rows.append(ReportRow(**r))
        return cls(dict(d["metadata"]), rows, dict(d["decision"]), list(d["warnings"]),
                   d.get("schema", SCHEMA_ID))

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        return cls.from_dict(json.loads(text))

    def to_tsv(self, full_precision: bool = False) -> str:
        d = self.to_dict(full_precision)
        out = io.StringIO()
        w = csv.writer(out, delimiter="\t", lineterminator="\n")
        w.writerow(["comparison", "dose", "raw_p", "adjusted_p", "significant",
                    "statistic", "df", "p_error_estimate", "max_from", "noael"])
        noael = d["decision"]["noael"]
        for r in d["rows"]:
            w.writerow([r["comparison"], r["dose"], repr(r["raw_p"]), repr(r["adjusted_p"]),
                        str(r["significant"]).lower(),
                        "" if r["statistic"] is None else r["statistic"],
                        "" if r["df"] is None else r["df"],
                        repr(r["p_error_estimate"]), r["max_from"],
                        "*" if r["dose"] == noael else ""])
        for k in ("noael", "med", "alpha", "direction"):
            w.writerow([f"# {k}", d["decision"][k]])
        for msg in d["warnings"]:
            w.writerow(["# warning", msg])
        return out.getvalue()


def load_schema() -> dict:
    text = resources.files("noael").joinpath("schemas", f"{SCHEMA_ID}.json").read_text()
    return json.loads(text)


def build_report(ds, config, closure, decision, dataset_id: str) -> ReportDocument:
    rows = []
    for c in closure.comparisons:
        rows.append(ReportRow(
            comparison=c.label,
            dose=c.dose_label,
            raw_p=float(c.raw_p),
            adjusted_p=float(c.adjusted_p),
            significant=bool(c.adjusted_p < closure.alpha),
            statistic=None if math.isnan(c.statistic) else float(c.statistic),
            df=None if math.isnan(c.df) else float(c.df),
            p_error_estimate=float(c.p_error_estimate),
            max_from=c.max_from,
            provenance=list(c.provenance),
            flags=list(c.flags),
        ))
    metadata = {
        "dataset": dataset_id,
        "endpoint": ds.kind.value,
        "groups": [{"label": g.label, "dose": g.dose_value, "n": g.n} for g in ds.groups],
        "method": config.method,
        "alpha": config.alpha,
        "direction": config.direction.value,
        "hc": config.hc_kind.value,
        "poly_k": config.poly_k,
        "margin": config.margin,
        "rank_scale": config.bm_scale,
        "seed": config.qmc_seed,
        "qmc_error_target": config.qmc_error_target,
        "tool_version": __version__,
    }
    dec = {
        "noael": decision.noael_label,
        "med": decision.med_label,
        "alpha": decision.alpha,
        "direction": config.direction.value,
        "note": decision.warning,
    }
    warnings = list(closure.warnings)
    if decision.warning and decision.noael_label == "TOP_DOSE_SAFE":
        warnings.append(decision.warning)
    return ReportDocument(metadata, rows, dec, warnings)
