"""Reference external evaluator for the subprocess wire protocol.

Reads one JSON request from stdin:

    {"parameters": {"<name>": <value>, ...}}

and writes one JSON response to stdout:

    {"objective": <number>, "sem": <number, optional>}

This example scores the sum of squared deviations of every numeric
parameter from 0.5.  Point a run config at it with:

    "objective": {"command": {"command": "python3 scripts/example_evaluator.py"}}
"""

import json
import sys


def main() -> None:
    request = json.load(sys.stdin)
    parameters = request["parameters"]
    objective = sum(
        (float(v) - 0.5) ** 2
        for v in parameters.values()
        if isinstance(v, (int, float)) and not isinstance(v, bool)
    )
    json.dump({"objective": objective}, sys.stdout)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
