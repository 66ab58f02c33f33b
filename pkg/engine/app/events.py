from typing import Callable

# In-process progress subscribers (the CLI printer, tests)
event_subscribers: list[Callable[[dict], None]] = []

EVENT_TAGS = {
    "solve_started": "SOLVE",
    "solve_finished": "SOLVE",
    "sweep_row": "SWEEP",
    "check_finished": "VERIFY",
    "oracle_block": "ORACLE",
    "run_finished": "RUN",
    "ledger": "LEDGER",
}


def subscribe(callback: Callable[[dict], None]):
    event_subscribers.append(callback)


def unsubscribe(callback: Callable[[dict], None]):
    if callback in event_subscribers:
        event_subscribers.remove(callback)


def broadcast_event(event_type: str, data: dict):
    """Broadcast an event to all subscribers"""
    event = {"type": event_type, "data": data}

    for callback in list(event_subscribers):
        try:
            callback(event)
        except Exception:
            pass


def print_event(event: dict):
    """Render an event as a tagged log line"""
    tag = EVENT_TAGS.get(event["type"], event["type"].upper())
    fields = " ".join(f"{k}={_short(v)}" for k, v in event["data"].items())
    print(f"[{tag}] {event['type']} {fields}")


def _short(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
