from datetime import timedelta

import humanize


def get_readable_time(seconds: float) -> str:
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    return humanize.precisedelta(timedelta(seconds=seconds), minimum_unit="seconds", format="%0.1f")
