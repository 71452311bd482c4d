import os

import pytest

from zkl import codec
from zkl.cli import bfs_order, dfs_order, edge_sum_parallel, main
from zkl.graphstore import Graph, generate_copying_graph, load_edge_list


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def edges_file(tmp_path):
    p = tmp_path / "g.edges"
    p.write_text("0 1\n0 2\n1 2\n2 0\n")
    return str(p)


# ---------------------------------------------------------------------------
# compress / decompress
# ---------------------------------------------------------------------------

def test_compress_decompress_roundtrip(tmp_path, capsys, edges_file):
    comp = str(tmp_path / "g.zkl")
    out = str(tmp_path / "back.edges")
    code, stdout, _ = run(capsys, "compress", edges_file, comp)
    assert code == 0
    assert "bits/edge" in stdout
    code, stdout, _ = run(capsys, "decompress", comp, out)
    assert code == 0
    assert "3 nodes, 4 edges" in stdout
    with open(edges_file) as a, open(out) as b:
        assert load_edge_list(a.read()) == load_edge_list(b.read())


def test_compress_csr_format(tmp_path, capsys):
    import io

    from zkl.graphstore import save_csr

    g = generate_copying_graph(80, seed=2)
    src = tmp_path / "g.csr"
    with open(src, "wb") as f:
        save_csr(g, f)
    comp = str(tmp_path / "g.zkl")
    back = str(tmp_path / "b.csr")
    assert run(capsys, "compress", str(src), comp, "--format", "csr")[0] == 0
    assert run(capsys, "decompress", comp, back, "--format", "csr")[0] == 0
    with open(back, "rb") as f:
        from zkl.graphstore import load_csr

        assert load_csr(f) == g


def test_compress_full_mode_flagset(tmp_path, capsys, edges_file):
    comp = str(tmp_path / "g.zkl")
    code, _, _ = run(capsys, "compress", edges_file, comp, "--mode", "full",
                     "--k", "5", "--i", "2", "--j", "1", "--window", "4",
                     "--iterations", "1")
    assert code == 0
    g = codec.decode_graph(open(comp, "rb").read())
    assert g.to_lists() == [[1, 2], [2], [0]]


# ---------------------------------------------------------------------------
# ls / stats
# ---------------------------------------------------------------------------

def test_ls_prints_neighbors(tmp_path, capsys, edges_file):
    comp = str(tmp_path / "g.zkl")
    run(capsys, "compress", edges_file, comp)
    code, stdout, _ = run(capsys, "ls", comp, "0")
    assert code == 0
    assert stdout.split() == ["1", "2"]


def test_ls_empty_list_prints_nothing(tmp_path, capsys):
    g = Graph.from_lists([[1], [], [0]])
    comp = tmp_path / "g.zkl"
    comp.write_bytes(codec.encode_graph(g))
    code, stdout, _ = run(capsys, "ls", str(comp), "1")
    assert code == 0
    assert stdout == ""


def test_ls_full_mode_is_usage_error(tmp_path, capsys, edges_file):
    comp = str(tmp_path / "g.zkl")
    run(capsys, "compress", edges_file, comp, "--mode", "full")
    code, _, err = run(capsys, "ls", comp, "0")
    assert code == 1
    assert "error" in err


def test_ls_node_out_of_range(tmp_path, capsys, edges_file):
    comp = str(tmp_path / "g.zkl")
    run(capsys, "compress", edges_file, comp)
    assert run(capsys, "ls", comp, "99")[0] == 1


def test_stats_output_sums(tmp_path, capsys, edges_file):
    comp = str(tmp_path / "g.zkl")
    run(capsys, "compress", edges_file, comp)
    code, stdout, _ = run(capsys, "stats", comp)
    assert code == 0
    lines = stdout.strip().splitlines()
    total = int(lines[-1].split()[1])
    parts = sum(int(ln.split()[1]) for ln in lines[:-1])
    assert parts == total == os.path.getsize(comp) * 8


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def test_gen_deterministic(tmp_path, capsys):
    a = tmp_path / "a.edges"
    b = tmp_path / "b.edges"
    assert run(capsys, "gen", "300", str(a), "--seed", "5")[0] == 0
    assert run(capsys, "gen", "300", str(b), "--seed", "5")[0] == 0
    assert a.read_text() == b.read_text()
    c = tmp_path / "c.edges"
    run(capsys, "gen", "300", str(c), "--seed", "6")
    assert a.read_text() != c.read_text()


# ---------------------------------------------------------------------------
# traversals
# ---------------------------------------------------------------------------

def test_bfs_path_order():
    lists = [[1], [2], []]
    assert bfs_order(lambda u: lists[u], 3) == [0, 1, 2]


def test_bfs_restarts_at_lowest_unvisited():
    lists = [[], [2], []]
    assert bfs_order(lambda u: lists[u], 3) == [0, 1, 2]


def test_dfs_stored_order_first():
    lists = [[1, 2], [3], [], []]
    assert dfs_order(lambda u: lists[u], 4) == [0, 1, 3, 2]


def test_traversals_equal_on_compressed(tmp_path):
    g = generate_copying_graph(250, seed=3)
    data = codec.encode_graph(g)
    h = codec.open_handle(data)
    cache: dict = {}
    plain = lambda u: g.neighbors(u).tolist()
    packed = lambda u: codec.neighbors(h, u, cache)
    assert bfs_order(plain, g.n) == bfs_order(packed, g.n)
    assert dfs_order(plain, g.n) == dfs_order(packed, g.n)


def test_bench_commands_run(tmp_path, capsys, edges_file):
    comp = str(tmp_path / "g.zkl")
    run(capsys, "compress", edges_file, comp)
    code, stdout, _ = run(capsys, "bench-bfs", comp)
    assert code == 0 and "visited 3 nodes" in stdout
    code, stdout, _ = run(capsys, "bench-dfs", comp)
    assert code == 0 and "visited 3 nodes" in stdout
    code, stdout, _ = run(capsys, "bench-edgesum", comp, "--threads", "2")
    assert code == 0 and "edge sum 5 " in stdout


# ---------------------------------------------------------------------------
# parallel edge sum
# ---------------------------------------------------------------------------

def test_edge_sum_matches_serial_and_is_thread_invariant():
    g = generate_copying_graph(3000, seed=4)
    data = codec.encode_graph(g, codec.EncoderParams(mode="list", C=16))
    expect = int(g.targets.sum())
    sums = {edge_sum_parallel(data, t) for t in (1, 2, 3, 4)}
    assert sums == {expect}


def test_edge_sum_rejects_bad_thread_count():
    g = generate_copying_graph(10, seed=0)
    data = codec.encode_graph(g)
    with pytest.raises(ValueError):
        edge_sum_parallel(data, 0)


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------

def test_exit_missing_file(capsys, tmp_path):
    assert run(capsys, "stats", str(tmp_path / "nope.zkl"))[0] == 2


def test_exit_corrupt_file(capsys, tmp_path):
    bad = tmp_path / "bad.zkl"
    bad.write_bytes(b"not a container at all")
    assert run(capsys, "stats", str(bad))[0] == 3


def test_exit_truncated_file(capsys, tmp_path, edges_file):
    comp = tmp_path / "g.zkl"
    run(capsys, "compress", edges_file, str(comp))
    data = comp.read_bytes()
    comp.write_bytes(data[: len(data) - 2])
    assert run(capsys, "decompress", str(comp), str(tmp_path / "o"))[0] == 3


def test_exit_bad_usage(capsys):
    assert run(capsys, "compress")[0] == 1
    assert run(capsys, "no-such-command")[0] == 1


def test_exit_bad_input_graph(capsys, tmp_path):
    bad = tmp_path / "bad.edges"
    bad.write_text("0 x\n")
    assert run(capsys, "compress", str(bad), str(tmp_path / "o.zkl"))[0] == 3
