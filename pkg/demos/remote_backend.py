"""
Same request, two backends
==========================

The local backend spawns an executable; the remote backend sends the input to
a JSON-RPC server. With the bundled mock on both ends the results match field
for field, which is the point: switching backends changes only the binding.
"""

import json
import tempfile
from pathlib import Path

from hitcheck.executor import (
    ExecutionRequest,
    LocalBackend,
    MockBackend,
    ReferenceServer,
    RemoteBackend,
    check_input,
    mock_executable,
)

script = {
    "rules": [{"pattern": "Diffusionn", "exit_code": 1,
               "stderr": "*** ERROR\nA 'Diffusionn' is not a registered object.\n"}],
    "default": {"exit_code": 0, "stdout": "Input check passed\n"},
}

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    (tmp / "mock.json").write_text(json.dumps(script))
    local = LocalBackend(mock_executable(tmp / "mock.json"))
    with ReferenceServer(MockBackend(script)) as server:
        remote = RemoteBackend(server.url)
        print("reference server at", server.url)
        for body in ("type = Diffusion\n", "type = Diffusionn\n"):
            path = tmp / "current.i"
            path.write_text(f"[Kernels]\n  [diff]\n    {body}  []\n[]\n")
            a = check_input(local, ExecutionRequest(path))
            b = check_input(remote, ExecutionRequest(path))
            print(body.strip(), "->", a.exit_code, repr(a.stderr or a.stdout), "| agree:", a.contract() == b.contract())
