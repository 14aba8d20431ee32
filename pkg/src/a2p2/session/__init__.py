from .service import Runtime, SessionService, iso_ms, metrics_from_events, parse_ts, replay, rt_between

__all__ = [
    "Runtime",
    "SessionService",
    "iso_ms",
    "metrics_from_events",
    "parse_ts",
    "replay",
    "rt_between",
]
