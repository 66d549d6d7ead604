"""Runs every CLI command with --json, validates the reports against the
published schema and checks that the exit status is nonzero exactly for
engine errors. Also drives `qps serve` over HTTP."""

import json
import os
import socket
import subprocess
import sys
import tempfile
import time
import urllib.error
import urllib.request

import jsonschema

QPS, SCHEMA, CORPUS = sys.argv[1:4]

with open(SCHEMA) as f:
    schema = json.load(f)
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)

failures = []


def corpus(name):
    return os.path.join(CORPUS, name)


def write_temp(text):
    fd, path = tempfile.mkstemp(suffix=".qp")
    with os.fdopen(fd, "w") as f:
        f.write(text)
    return path


TWO_CYCLE = write_temp(
    "field rationals\nalgebra F dim=1 basis=e\nvertex 1 algebra=F\nvertex 2 algebra=F\nvertex 3 algebra=F\n"
    "arrow a 1 -> 2\narrow b 2 -> 1\narrow c 2 -> 3\narrow d 3 -> 2\npotential = a*b + c*d + a*b*a*b\n"
)
BAD_SYNTAX = write_temp("field rationals\nalgebra F dim=1 basis=e\nvertex 1 algebra=F\npotential = (\n")


def check(args, expect_error, expect_command=None):
    proc = subprocess.run([QPS, "--json", *args], capture_output=True, text=True, timeout=600)
    label = " ".join(args)
    if (proc.returncode != 0) != expect_error:
        failures.append(f"{label}: exit {proc.returncode}, stderr {proc.stderr.strip()}")
        return None
    try:
        report = json.loads(proc.stdout)
    except json.JSONDecodeError as e:
        failures.append(f"{label}: stdout is not JSON ({e})")
        return None
    errors = sorted(validator.iter_errors(report), key=str)
    if errors:
        failures.append(f"{label}: schema violation: {errors[0].message}")
    if expect_error != ("error" in report):
        failures.append(f"{label}: error report mismatch")
    if expect_command and report.get("command") != expect_command:
        failures.append(f"{label}: command {report.get('command')!r}, expected {expect_command!r}")
    return report


for name in ["triangle.qp", "path.qp", "species1416.qp", "species123.qp"]:
    check(["print", "--input", corpus(name)], False, "state")
    check(["jacobian", "--depth", "4", "--input", corpus(name)], False, "jacobian")
    check(["generators", "--input", corpus(name)], False, "generators")
    check(["mutate", "--at", "1", "--input", corpus(name)], False, "mutate-sequence")

check(["realize", "--matrix", "0,-4,0,6;1,0,-1,0;0,4,0,-6;-1,0,1,0", "--d", "1,4,1,6", "--potential", "a1_4*a4_3*a3_2*a2_1"], False, "realize")
check(["realize", "--matrix", "0,2;-1,0", "--d", "1,2", "--order", "2"], False, "realize")
r = check(["mutate", "--at", "2", "--input", corpus("triangle.qp")], False)
if r and r["state"]["matrix"]["b"] != [[0, -1, 0], [1, 0, -1], [0, 1, 0]]:
    failures.append("triangle mutate at 2: unexpected matrix")
check(["mutate", "--at", "1", "--at", "2", "--at", "1", "--input", corpus("species1416.qp")], False, "mutate-sequence")
r = check(["reduce", "--input", TWO_CYCLE], False, "reduce")
if r and (len(r["pairs"]) != 2 or not r["replay_ok"]):
    failures.append("reduce on the 2-cycle document: expected two trivial pairs and a replayable log")
r = check(["check-involution", "--at", "2", "--depth", "4", "--input", corpus("triangle.qp")], False, "check-involution")
if r and not (r["tier1"] and r["tier2"] and r["tier3"]):
    failures.append("triangle involution tiers")
r = check(["search-nondegenerate", "--sequence", "1,2,1", "--trials", "50", "--seed", "7", "--input", corpus("species1416.qp")], False, "search-nondegenerate")
if r and not r["found"]:
    failures.append("species1416 search did not succeed")

check(["print", "--input", "/nonexistent/file.qp"], True)
check(["print", "--input", BAD_SYNTAX], True)
r = check(["mutate", "--at", "1", "--input", TWO_CYCLE], True)
if r and "2-cycle through vertex 1" not in r["error"]["message"]:
    failures.append("2-cycle diagnostic missing")
check(["mutate", "--at", "9", "--input", corpus("triangle.qp")], True)
check(["realize", "--matrix", "0,1;1,0"], True)
check(["search-nondegenerate", "--sequence", "1,1", "--input", corpus("species1416.qp")], True)

usage = subprocess.run([QPS, "no-such-command"], capture_output=True, text=True)
if usage.returncode == 0:
    failures.append("usage error exited 0")


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


port = free_port()
server = subprocess.Popen([QPS, "serve", "--input", corpus("triangle.qp")], env={**os.environ, "QPS_PORT": str(port)},
                          stderr=subprocess.PIPE, text=True)
try:
    base = f"http://127.0.0.1:{port}"

    def request(path, body=None):
        data = None if body is None else json.dumps(body).encode()
        req = urllib.request.Request(base + path, data=data, method="GET" if body is None else "POST")
        try:
            with urllib.request.urlopen(req, timeout=60) as resp:
                return resp.status, json.loads(resp.read())
        except urllib.error.HTTPError as e:
            return e.code, json.loads(e.read())

    for _ in range(100):
        try:
            request("/state")
            break
        except (urllib.error.URLError, ConnectionError):
            time.sleep(0.05)
    for path, body, status in [("/state", None, 200), ("/mutate", {"vertex": 2}, 200), ("/jacobian?depth=4", None, 200),
                               ("/search", {"sequence": [1], "trials": 10, "seed": 3}, 200), ("/undo", {}, 200),
                               ("/undo", {}, 400), ("/mutate", {"vertex": 7}, 400)]:
        code, report = request(path, body)
        if code != status:
            failures.append(f"server {path}: status {code}, expected {status}")
        errors = list(validator.iter_errors(report))
        if errors:
            failures.append(f"server {path}: schema violation: {errors[0].message}")
finally:
    server.terminate()
    server.wait(timeout=30)

for path in [TWO_CYCLE, BAD_SYNTAX]:
    os.unlink(path)

for f in failures:
    print("FAIL", f)
print(f"{'OK' if not failures else 'FAILED'}: cli schema check, {len(failures)} failures")
sys.exit(1 if failures else 0)
