"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed in the terminal
summary (and immediately, with ``-s``).
"""

import contextlib
import itertools
import random
import time

import pytest

from duabe import files
from duabe.cli import main
from duabe.errors import FormatError, GidMismatchError, PolicyNotSatisfiedError
from duabe.group import ORDER, G1Element, Scalar, random_gt
from duabe.policy import (
    And,
    Leaf,
    evaluate,
    find_reconstruction,
    leaves,
    policy_to_lsss,
    satisfying_subsets_bruteforce,
)
from duabe.protocol import (
    PHASE_ISSUANCE,
    NodeConfig,
    SimulatedNetwork,
    bootstrap,
    measure_bootstrap_cost,
    request_key,
)
from duabe.scenario import load_scenario
from duabe.scheme import (
    KeyShare,
    _recover,
    decrypt,
    encrypt,
    global_setup,
    keygen_share,
    keypair_from_exponents,
    verify_key_share,
)
from support import Authorities, random_policy

pytestmark = pytest.mark.acceptance


@contextlib.contextmanager
def criterion(log, number, title):
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        line = f"FAIL  criterion {number}: {title} ({type(exc).__name__}: {exc})"
        print(line)
        log.append(line)
        raise
    extra = ", ".join(f"{k}={v}" for k, v in detail.items())
    line = f"PASS  criterion {number}: {title}" + (f" [{extra}]" if extra else "")
    print(line)
    log.append(line)


def all_subsets(universe):
    universe = sorted(universe)
    return [frozenset(c) for k in range(len(universe) + 1)
            for c in itertools.combinations(universe, k)]


def test_correctness_sweep(acceptance_log):
    with criterion(acceptance_log, 1, "correctness sweep, 50 policies x all subsets") as d:
        start = time.perf_counter()
        rng = random.Random(1001)
        gp = global_setup(128)
        auth = Authorities(gp, {a: [f"du{i}" for i in range(rng.randint(1, 3))] for a in "ABCDE"}, rng)
        keys = auth.user_keys("reader", "ABCDE")
        mismatches = trials = 0
        for _ in range(50):
            ast = random_policy(rng, 5)
            matrix = policy_to_lsss(ast)
            oracle = satisfying_subsets_bruteforce(matrix, "ABCDE")
            for held in all_subsets("ABCDE"):
                trials += 1
                message = random_gt(rng, gp.group)
                ct = encrypt(message, matrix, gp, auth.bulletin, rng)
                expected = evaluate(ast, held)
                if (held in oracle) != expected:
                    mismatches += 1
                    continue
                try:
                    ok = decrypt(ct, "reader", {a: keys[a] for a in held}, gp) == message
                except PolicyNotSatisfiedError:
                    ok = False
                if ok != expected:
                    mismatches += 1
        elapsed = time.perf_counter() - start
        d.update(trials=trials, mismatches=mismatches, seconds=f"{elapsed:.1f}")
        assert mismatches == 0
        assert elapsed < 60


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_aggregation_equivalence(acceptance_log, n):
    with criterion(acceptance_log, 2, f"aggregation equals summed-exponent authority, n={n}") as d:
        network = SimulatedNetwork()
        configs = [NodeConfig(f"du{i}", {"A"}) for i in range(n)]
        nodes, bulletin = bootstrap(configs, network, random.Random(2000 + n))
        network.set_phase(PHASE_ISSUANCE)
        gp = nodes["du0"].gp
        mks = [nodes[f"du{i}"].master_shares["A"] for i in range(n)]
        alpha = sum((mk.alpha for mk in mks), Scalar(0))
        beta = sum((mk.beta for mk in mks), Scalar(0))
        single_mk, single_pk = keypair_from_exponents("A", "single", alpha, beta, gp)

        assert bulletin["A"].e_alpha_sum.to_bytes() == single_pk.e_alpha.to_bytes()
        assert bulletin["A"].g_beta_sum.to_bytes() == single_pk.g_beta.to_bytes()
        for gid in sorted(nodes):
            sk = request_key(nodes[gid], "A", network)
            assert sk.value.to_bytes() == keygen_share(gid, single_mk, gp).value.to_bytes()
        d.update(users=n)


def test_collusion_falsification(acceptance_log):
    with criterion(acceptance_log, 3, "mixed-GID collusion on And(A,B), 100 trials") as d:
        rng = random.Random(3003)
        gp = global_setup(128)
        auth = Authorities(gp, {"A": ["x", "y"], "B": ["y", "z"]}, rng)
        matrix = policy_to_lsss(And(Leaf("A"), Leaf("B")))
        wrong = blocked = 0
        for t in range(100):
            message = random_gt(rng, gp.group)
            ct = encrypt(message, matrix, gp, auth.bulletin, rng)
            alice, bob = f"alice-{t}", f"bob-{t}"
            pooled = {"A": auth.user_key(alice, "A"), "B": auth.user_key(bob, "B")}
            if all(_recover(ct, g, pooled, gp) != message for g in (alice, bob)):
                wrong += 1
            try:
                decrypt(ct, alice, pooled, gp)
            except GidMismatchError:
                blocked += 1
        d.update(wrong_plaintext=f"{wrong}/100", gid_mismatch=f"{blocked}/100")
        assert wrong == 100 and blocked == 100


def test_protocol_cost_formula(acceptance_log):
    with criterion(acceptance_log, 4, "issuance message counts and 5/4/3 committee total") as d:
        for n in (1, 2, 3, 5, 8):
            network = SimulatedNetwork()
            nodes, _ = bootstrap([NodeConfig(f"du{i}", {"A"}) for i in range(n)],
                                 network, random.Random(n))
            network.set_phase(PHASE_ISSUANCE)
            for gid in sorted(nodes):
                before = network.cost(PHASE_ISSUANCE).messages
                request_key(nodes[gid], "A", network)
                assert network.cost(PHASE_ISSUANCE).messages - before == 2 * (n - 1)
            assert network.cost(PHASE_ISSUANCE).messages == n * 2 * (n - 1)
        scenario = load_scenario("house")
        report = measure_bootstrap_cost(scenario.nodes, SimulatedNetwork(), random.Random(4))
        sizes = sorted(report.group_sizes.values(), reverse=True)
        assert sizes == [5, 4, 3]
        d.update(committee_total=report.issuance_messages)
        assert report.issuance_messages == 76


def test_lsss_soundness(acceptance_log):
    with criterion(acceptance_log, 5, "LSSS soundness, 200 policies x all subsets") as d:
        rng = random.Random(5005)
        checked = 0
        for _ in range(200):
            ast = random_policy(rng, 6, alphabet="ABCDEF")
            matrix = policy_to_lsss(ast)
            for held in all_subsets(set(leaves(ast))):
                try:
                    plan = find_reconstruction(matrix, held)
                except PolicyNotSatisfiedError:
                    assert not evaluate(ast, held)
                    continue
                assert evaluate(ast, held)
                assert all(matrix.rho[x] in held for x in plan.coeffs)
                acc = [sum(c * matrix.rows[x][k] for x, c in plan.coeffs.items()) % ORDER
                       for k in range(matrix.width)]
                assert acc == [1] + [0] * (matrix.width - 1)
                checked += 1
        d.update(plans_checked=checked)


def _share_passes(raw: bytes, honest: KeyShare, pk, gp) -> bool:
    try:
        value = G1Element.from_bytes(raw)
    except FormatError:
        return False
    return verify_key_share(KeyShare(honest.attribute, honest.gid, honest.issuer, value), pk, gp)


def test_share_verification(acceptance_log):
    with criterion(acceptance_log, 6, "share verification, honest pass / 100 tampered fail") as d:
        rng = random.Random(6006)
        gp = global_setup(128)
        scenario = load_scenario("house")
        groups = {}
        for cfg in scenario.nodes:
            for attr in cfg.attributes:
                groups.setdefault(attr, []).append(cfg.gid)
        auth = Authorities(gp, groups, rng)
        honest = []
        for attr, members in groups.items():
            for mk, pk in zip(auth.mks[attr], auth.pks[attr]):
                for gid in members:
                    honest.append((keygen_share(gid, mk, gp), pk))
        assert all(verify_key_share(s, pk, gp) for s, pk in honest)

        caught = 0
        for _ in range(100):
            share, pk = rng.choice(honest)
            raw = bytearray(share.value.to_bytes())
            pos = rng.randrange(len(raw))
            raw[pos] ^= rng.randrange(1, 256)
            if not _share_passes(bytes(raw), share, pk, gp):
                caught += 1
        d.update(honest=len(honest), tampered_rejected=f"{caught}/100")
        assert caught == 100


def test_end_to_end_cli(acceptance_log, tmp_path, capsys):
    with criterion(acceptance_log, 7, "end-to-end CLI on the House/Budget topology") as d:
        start = time.perf_counter()
        ks = tmp_path / "ks"
        scenario = load_scenario("house")
        held = {c.gid: c.attributes for c in scenario.nodes}
        groups = {}
        for gid, attrs in held.items():
            for a in attrs:
                groups.setdefault(a, []).append(gid)

        def cli(*argv):
            return main([argv[0], "--keystore", str(ks), *argv[1:]])

        assert cli("setup") == 0
        for attr, members in groups.items():
            for gid in members:
                assert cli("authsetup", "--attribute", attr, "--gid", gid) == 0
        for attr in groups:  # publish the bulletin
            assert cli("aggregate-pk", "--attribute", attr) == 0
        for gid, attrs in held.items():
            for attr in attrs:
                for issuer in groups[attr]:
                    mk = ks / "master" / f"{attr}@{issuer}.mk"
                    assert cli("issue-share", "--gid", gid, str(mk)) == 0
                assert cli("request-key", "--gid", gid, "--attribute", attr) == 0

        payload = tmp_path / "memo.bin"
        payload.write_bytes(random.Random(7).randbytes(1500))
        sealed = tmp_path / "memo.duabe"
        assert cli("encrypt", "--policy", '"House" & "Budget"', "--out", str(sealed), str(payload)) == 0

        opened = []
        for gid, attrs in held.items():
            out = tmp_path / f"{gid}.out"
            keys = [str(ks / "keys" / gid / f"{a}.usk") for a in sorted(attrs)]
            code = cli("decrypt", "--gid", gid, "--out", str(out), str(sealed), *keys)
            if code == 0:
                assert out.read_bytes() == payload.read_bytes()
                opened.append(gid)
            else:
                assert not out.exists()
        expected = sorted(g for g, a in held.items() if {"House", "Budget"} <= a)
        assert sorted(opened) == expected

        # tampering: sealed-file byte flips, a forged key share, the adversary scenario
        rng = random.Random(77)
        blob = sealed.read_bytes()
        reader = expected[0]
        keys = [str(ks / "keys" / reader / f"{a}.usk") for a in sorted(held[reader])]
        silent = 0
        for i in range(100):
            bad = bytearray(blob)
            bad[rng.randrange(len(bad))] ^= 1 << rng.randrange(8)
            forged = tmp_path / "forged.duabe"
            forged.write_bytes(bytes(bad))
            out = tmp_path / f"forged-{i}.out"
            if cli("decrypt", "--gid", reader, "--out", str(out), str(forged), *keys) == 0 or out.exists():
                silent += 1
        share = next((ks / "shares").glob("Budget@*.ks"))
        raw = bytearray(share.read_bytes())
        raw[-1] ^= 0x01
        bad_share = tmp_path / "bad.ks"
        bad_share.write_bytes(bytes(raw))
        assert cli("request-key", "--gid", files.read_file(share).gid,
                   "--out", str(tmp_path / "bad.usk"), str(bad_share)) != 0
        assert main(["simulate", "tamper", "--seed", "7"]) == 0
        assert "ShareVerificationFailed(mallory)" in capsys.readouterr().out
        assert main(["simulate", "house", "--seed", "7"]) == 0

        elapsed = time.perf_counter() - start
        d.update(decrypted=",".join(opened), silent_corruptions=silent, seconds=f"{elapsed:.1f}")
        assert silent == 0
        assert elapsed < 30
