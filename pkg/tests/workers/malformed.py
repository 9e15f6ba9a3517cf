"""Stub worker that answers one candidate (MALFORMED_ID) with a non-JSON line."""

import os

from _stub import default_result, serve

MALFORMED_ID = int(os.environ.get("MALFORMED_ID", "-1"))


def handle(request):
    if request["id"] == MALFORMED_ID:
        return "{this is not json"
    return default_result(request)


if __name__ == "__main__":
    serve(handle)
