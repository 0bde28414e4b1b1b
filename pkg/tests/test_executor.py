from __future__ import annotations

import json
import time

import pytest

from hitcheck.executor import (
    TIMEOUT_EXIT_CODE,
    ConfigurationError,
    ExecutionRequest,
    ExecutorConfig,
    InputNotFoundError,
    LocalBackend,
    MockBackend,
    ReferenceServer,
    RemoteBackend,
    RemoteError,
    check_input,
    load_config,
    make_backend,
    mesh_only,
    mock_executable,
    run_input,
)
from hitcheck.executor.core import DEFAULT_STREAM_CAP

SCRIPT = {
    "rules": [
        {"pattern": "valu\\b", "exit_code": 1, "stderr": "unknown parameter 'valu'\n"},
        {"pattern": "MESH", "modes": ["mesh_only"], "exit_code": 0,
         "artifacts": [{"kind": "mesh", "path": "out.e"}]},
        {"pattern": "SLEEP", "exit_code": 0, "stdout": "started\n", "sleep": 5},
        {"pattern": "DIVERGE", "exit_code": 2, "stderr": "Solve Did NOT Converge!\n  residual 1e+30\n"},
        {"pattern": "HUGE", "exit_code": 0, "stdout": "x" * 1024, "stdout_repeat": 1100},
    ],
    "default": {"exit_code": 0, "stdout": "ok\n"},
}


@pytest.fixture
def script_path(tmp_path):
    p = tmp_path / "mock.json"
    p.write_text(json.dumps(SCRIPT))
    return p


@pytest.fixture(params=["mock", "local", "remote"])
def backend(request, script_path):
    if request.param == "mock":
        yield MockBackend(SCRIPT)
    elif request.param == "local":
        yield LocalBackend(mock_executable(script_path))
    else:
        with ReferenceServer(MockBackend(SCRIPT)) as server:
            yield RemoteBackend(server.url)


def _req(tmp_path, content, **kw):
    p = tmp_path / "in.i"
    p.write_text(content)
    return ExecutionRequest(p, **kw)


def test_exit_zero(backend, tmp_path):
    result = check_input(backend, _req(tmp_path, "[A]\n[]\n"))
    assert (result.exit_code, result.timed_out) == (0, False)
    assert result.passed and result.stdout == "ok\n"


def test_scripted_stderr(backend, tmp_path):
    result = check_input(backend, _req(tmp_path, "valu = 1\n"))
    assert result.exit_code == 1 and not result.passed
    assert "unknown parameter 'valu'" in result.stderr


def test_missing_input_fails_before_spawn(backend, tmp_path):
    with pytest.raises(InputNotFoundError):
        check_input(backend, ExecutionRequest(tmp_path / "absent.i"))


def test_mesh_artifact(backend, tmp_path):
    result = mesh_only(backend, _req(tmp_path, "MESH\n"))
    assert result.exit_code == 0
    assert [(a.kind, a.path.rsplit("/", 1)[-1]) for a in result.artifacts] == [("mesh", "out.e")]


def test_exit_zero_without_artifacts(backend, tmp_path):
    result = mesh_only(backend, _req(tmp_path, "plain\n"))
    assert result.exit_code == 0 and result.artifacts == ()


def test_timeout(backend, tmp_path):
    start = time.monotonic()
    result = run_input(backend, _req(tmp_path, "SLEEP\n", time_limit=1))
    elapsed = time.monotonic() - start
    assert result.timed_out and result.exit_code == TIMEOUT_EXIT_CODE != 0
    assert abs(elapsed - 1.0) <= 0.5
    assert not result.passed


def test_divergence_text_preserved(backend, tmp_path):
    result = run_input(backend, _req(tmp_path, "DIVERGE\n"))
    assert result.exit_code == 2
    assert result.stderr == "Solve Did NOT Converge!\n  residual 1e+30\n"


def test_truncation(backend, tmp_path):
    result = run_input(backend, _req(tmp_path, "HUGE\n"))
    assert result.truncated
    assert len(result.stdout.encode()) == DEFAULT_STREAM_CAP


def test_backends_agree(script_path, tmp_path):
    contents = ["[A]\n[]\n", "valu = 1\n", "DIVERGE\n", "HUGE\n"]
    mock = MockBackend(SCRIPT)
    local = LocalBackend(mock_executable(script_path))
    with ReferenceServer(MockBackend(SCRIPT)) as server:
        remote = RemoteBackend(server.url)
        for content in contents:
            results = [run_input(b, _req(tmp_path, content)) for b in (mock, local, remote)]
            assert results[0].contract() == results[1].contract() == results[2].contract()
            assert [r.backend for r in results] == ["mock", "local", "remote"]


def test_request_validation(tmp_path):
    with pytest.raises(ValueError):
        ExecutionRequest(tmp_path / "x.i", mode="solve")
    with pytest.raises(ValueError):
        ExecutionRequest(tmp_path / "x.i", time_limit=0)


def test_local_command_line(script_path, tmp_path):
    backend = LocalBackend(mock_executable(script_path))
    req = _req(tmp_path, "x\n", mode="mesh_only", extra_args=("--n-threads=2",))
    cmd = backend.command(req)
    assert cmd[-4:] == ["-i", str(req.input_path.resolve()), "--mesh-only", "--n-threads=2"]


def test_local_needs_executable(tmp_path):
    with pytest.raises(ConfigurationError):
        LocalBackend(None)
    with pytest.raises(ConfigurationError):
        LocalBackend(str(tmp_path / "no-such-app"))


def test_remote_unavailable(tmp_path):
    from hitcheck.executor import BackendUnavailableError

    backend = RemoteBackend("http://127.0.0.1:9/")
    with pytest.raises(BackendUnavailableError):
        check_input(backend, _req(tmp_path, "x\n"))


def test_server_protocol_errors():
    server = ReferenceServer(MockBackend(SCRIPT))
    try:
        assert server.handle({"jsonrpc": "2.0", "id": 1, "method": "moose.nope"})["error"]["code"] == -32601
        assert server.handle({"id": 1, "method": "moose.check_input"})["error"]["code"] == -32600
        bad = {"jsonrpc": "2.0", "id": 2, "method": "moose.check_input", "params": {}}
        assert server.handle(bad)["error"]["code"] == -32602
    finally:
        server.close()


def test_remote_error_surfaces(tmp_path):
    with ReferenceServer(MockBackend(SCRIPT)) as server:
        client = RemoteBackend(server.url)
        with pytest.raises(RemoteError) as info:
            client.call("moose.nope", {}, timeout=5)
        assert info.value.code == -32601


def test_config_roundtrip(tmp_path, script_path):
    cfg = tmp_path / "exec.json"
    cfg.write_text(json.dumps({"backend": "mock", "mock_script": script_path.name, "time_limit": 3}))
    config = load_config(cfg)
    assert config.mock_script == str(tmp_path / "mock.json") and config.time_limit == 3
    assert isinstance(make_backend(config), MockBackend)


@pytest.mark.parametrize(
    "data",
    [{"backend": "slurm"}, {"time_limit": 0}, {"colour": 1}, {"backend": "local"}, {"backend": "remote"},
     {"backend": "mock"}],
)
def test_config_errors(tmp_path, data):
    cfg = tmp_path / "exec.json"
    cfg.write_text(json.dumps(data))
    with pytest.raises(ConfigurationError):
        make_backend(load_config(cfg))


def test_config_unreadable(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")
    assert ExecutorConfig().backend == "mock"
