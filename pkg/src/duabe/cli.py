"""Command-line interface.

Keystore layout (``--keystore DIR``)::

    params.duabe                      global parameters
    master/<attr>@<gid>.mk            master-key shares (mode 0600)
    public/<attr>@<gid>.pk            published public-key shares
    bulletin/<attr>.apk               aggregated attribute public keys
    shares/<attr>@<gid>@<issuer>.ks   key shares issued to a user
    keys/<gid>/<attr>.usk             aggregated user secret keys

Exit codes: 0 success, 2 usage, 3 crypto/policy failure, 4 I/O or format.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path
from urllib.parse import quote

from . import files
from .errors import (
    DuAbeError,
    FormatError,
    MissingAttributeKeyError,
    MissingParamsError,
    RefusesOverwriteError,
    ShareVerificationFailedError,
)
from .files import FileKind
from .kem import SealedPayload, open_sealed, seal
from .policy import compile_policy
from .report import render_tsv, write_report_dir
from .scenario import load_scenario, run_scenario
from .scheme import (
    aggregate_public_key,
    aggregate_secret_key,
    authority_setup,
    global_setup,
    keygen_share,
    verify_key_share,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CRYPTO = 3
EXIT_IO = 4

log = logging.getLogger("duabe")


class UsageError(Exception):
    pass


def _q(name: str) -> str:
    return quote(name, safe="")


class Keystore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def params_path(self) -> Path:
        return self.root / "params.duabe"

    def master(self, attr: str, gid: str) -> Path:
        return self.root / "master" / f"{_q(attr)}@{_q(gid)}.mk"

    def public(self, attr: str, gid: str) -> Path:
        return self.root / "public" / f"{_q(attr)}@{_q(gid)}.pk"

    def bulletin_dir(self) -> Path:
        return self.root / "bulletin"

    def bulletin(self, attr: str) -> Path:
        return self.bulletin_dir() / f"{_q(attr)}.apk"

    def share(self, attr: str, gid: str, issuer: str) -> Path:
        return self.root / "shares" / f"{_q(attr)}@{_q(gid)}@{_q(issuer)}.ks"

    def user_key(self, gid: str, attr: str) -> Path:
        return self.root / "keys" / _q(gid) / f"{_q(attr)}.usk"

    def load_params(self):
        if not self.params_path.exists():
            raise MissingParamsError(f"no global parameters at {self.params_path}; run setup")
        return files.read_file(self.params_path, FileKind.GLOBAL_PARAMS)


def _rng(args):
    return random.Random(args.seed) if args.seed is not None else None


def _load_input(path: Path, expect: FileKind):
    """Load a non-secret input, refusing master shares outright."""
    kind = files.file_kind(path)
    if kind is FileKind.MASTER_SHARE:
        raise UsageError(f"{path} is a master-key share; refusing to use it here")
    return files.read_file(path, expect)


def cmd_setup(args) -> int:
    ks = Keystore(args.keystore)
    out = Path(args.out) if args.out else ks.params_path
    files.write_bytes(out, files.encode(global_setup(128)))
    print(out)
    return EXIT_OK


def cmd_authsetup(args) -> int:
    ks = Keystore(args.keystore)
    gp = ks.load_params()
    mk_path, pk_path = ks.master(args.attribute, args.gid), ks.public(args.attribute, args.gid)
    if mk_path.exists() or pk_path.exists():
        raise RefusesOverwriteError(f"{args.gid} already has a share for {args.attribute!r}")
    mk, pk = authority_setup(args.attribute, args.gid, gp, _rng(args))
    mk_path.parent.mkdir(parents=True, exist_ok=True, mode=0o700)
    files.write_bytes(mk_path, files.encode(mk), private=True, overwrite=False)
    files.write_bytes(pk_path, files.encode(pk), overwrite=False)
    print(mk_path)
    print(pk_path)
    return EXIT_OK


def cmd_aggregate_pk(args) -> int:
    ks = Keystore(args.keystore)
    paths = [Path(p) for p in args.shares] or sorted(
        (ks.root / "public").glob(f"{_q(args.attribute)}@*.pk"))
    if not paths:
        raise UsageError(f"no public shares found for {args.attribute!r}")
    shares = [_load_input(p, FileKind.PUBLIC_SHARE) for p in paths]
    apk = aggregate_public_key(shares)
    if args.attribute and apk.attribute != args.attribute:
        raise UsageError(f"shares are for {apk.attribute!r}, not {args.attribute!r}")
    out = Path(args.out) if args.out else ks.bulletin(apk.attribute)
    files.write_bytes(out, files.encode(apk))
    print(out)
    return EXIT_OK


def cmd_issue_share(args) -> int:
    ks = Keystore(args.keystore)
    gp = ks.load_params()
    mk = files.read_file(args.master, FileKind.MASTER_SHARE)
    share = keygen_share(args.gid, mk, gp)
    out = Path(args.out) if args.out else ks.share(mk.attribute, args.gid, mk.holder)
    files.write_bytes(out, files.encode(share))
    print(out)
    return EXIT_OK


def cmd_request_key(args) -> int:
    """Offline key assembly: verify every issuer's share, then aggregate."""
    ks = Keystore(args.keystore)
    gp = ks.load_params()
    paths = [Path(p) for p in args.shares]
    if not paths and args.attribute:
        paths = sorted((ks.root / "shares").glob(f"{_q(args.attribute)}@{_q(args.gid)}@*.ks"))
    if not paths:
        raise UsageError("no key-share files given")
    shares = [_load_input(p, FileKind.KEY_SHARE) for p in paths]
    for share in shares:
        if share.gid != args.gid:
            raise UsageError(f"share from {share.issuer} was issued to {share.gid!r}")
        pk_path = ks.public(share.attribute, share.issuer)
        if not pk_path.exists():
            raise ShareVerificationFailedError(share.issuer, "no published public share on file")
        pk = files.read_file(pk_path, FileKind.PUBLIC_SHARE)
        if not verify_key_share(share, pk, gp):
            raise ShareVerificationFailedError(share.issuer)
    key = aggregate_secret_key(shares)
    bulletin = ks.bulletin(key.attribute)
    if bulletin.exists():
        apk = files.read_file(bulletin, FileKind.ATTR_PUBKEY)
        if apk.contributor_count != key.share_count:
            log.warning("key aggregates %d of %d shares for %r",
                        key.share_count, apk.contributor_count, key.attribute)
    out = Path(args.out) if args.out else ks.user_key(args.gid, key.attribute)
    files.write_bytes(out, files.encode(key), private=True)
    print(out)
    return EXIT_OK


def cmd_encrypt(args) -> int:
    ks = Keystore(args.keystore)
    gp = ks.load_params()
    matrix = compile_policy(args.policy)
    bulletin_dir = Path(args.bulletin) if args.bulletin else ks.bulletin_dir()
    pks = {}
    for path in sorted(bulletin_dir.glob("*.apk")) if bulletin_dir.is_dir() else []:
        apk = _load_input(path, FileKind.ATTR_PUBKEY)
        pks[apk.attribute] = apk
    for attr in matrix.rho:
        if attr not in pks:
            raise MissingAttributeKeyError(attr)
    payload = Path(args.payload).read_bytes()
    blob = seal(payload, args.policy, gp, {a: pks[a] for a in set(matrix.rho)}, _rng(args))
    files.write_bytes(args.out, blob)
    print(args.out)
    return EXIT_OK


def cmd_decrypt(args) -> int:
    ks = Keystore(args.keystore)
    gp = ks.load_params()
    keys = {}
    for path in args.keys:
        key = _load_input(Path(path), FileKind.USER_KEY)
        keys[key.attribute] = key
    data = Path(args.sealed).read_bytes()
    payload = open_sealed(data, args.gid, keys, gp)
    files.write_bytes(args.out, payload)
    return EXIT_OK


def _describe_file(path: Path) -> dict:
    data = path.read_bytes()
    env = files.decode_envelope(data)
    info = {"kind": env.kind.label, "metadata": env.meta, "body_bytes": len(env.body)}
    if env.kind is FileKind.MASTER_SHARE:
        info["body"] = "<redacted>"
    elif env.kind is FileKind.SEALED:
        sealed = SealedPayload.from_bytes(data)
        info["matrix"] = sealed.core.matrix.to_json_obj()
        info["payload_bytes"] = len(sealed.core.payload or b"")
    else:
        files.decode(data)  # validates the body
    return info


def cmd_inspect(args) -> int:
    if args.policy:
        print(compile_policy(args.policy).to_json())
        return EXIT_OK
    if not args.file:
        raise UsageError("inspect needs a FILE or --policy")
    print(json.dumps(_describe_file(Path(args.file)), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    report = run_scenario(scenario, _rng(args))
    sys.stdout.write(render_tsv(report))
    if args.report_dir:
        for path in write_report_dir(report, args.report_dir):
            log.info("wrote %s", path)
    return EXIT_OK if report.all_passed else EXIT_CRYPTO


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--keystore", default=".", metavar="DIR",
                        help="keystore directory (default: current directory)")
    common.add_argument("--seed", type=int, default=None, metavar="N",
                        help="deterministic randomness; for tests only")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="duabe", description="Data-user-managed CP-ABE")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", parents=[common], help="write the global parameters")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("authsetup", parents=[common], help="create a master/public share pair")
    p.add_argument("--attribute", required=True)
    p.add_argument("--gid", required=True)
    p.set_defaults(func=cmd_authsetup)

    p = sub.add_parser("aggregate-pk", parents=[common], help="combine public shares")
    p.add_argument("--attribute", default=None)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("shares", nargs="*", metavar="PUBLIC_SHARE")
    p.set_defaults(func=cmd_aggregate_pk)

    p = sub.add_parser("issue-share", parents=[common], help="issue a key share to a user")
    p.add_argument("--gid", required=True, help="the requesting user")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("master", metavar="MASTER_SHARE")
    p.set_defaults(func=cmd_issue_share)

    p = sub.add_parser("request-key", parents=[common],
                       help="verify and aggregate key shares into a user key")
    p.add_argument("--gid", required=True)
    p.add_argument("--attribute", default=None)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("shares", nargs="*", metavar="KEY_SHARE")
    p.set_defaults(func=cmd_request_key)

    p = sub.add_parser("encrypt", parents=[common], help="seal a file under a policy")
    p.add_argument("--policy", required=True)
    p.add_argument("--bulletin", metavar="DIR")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("payload", metavar="PAYLOAD")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", parents=[common], help="open a sealed file")
    p.add_argument("--gid", required=True)
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("sealed", metavar="SEALED")
    p.add_argument("keys", nargs="+", metavar="USER_KEY")
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("inspect", parents=[common], help="describe a file or compile a policy")
    p.add_argument("--policy")
    p.add_argument("file", nargs="?")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("simulate", parents=[common], help="run a protocol scenario")
    p.add_argument("scenario", help="scenario file, or the name of a bundled one")
    p.add_argument("--report-dir", metavar="DIR", help="also write TSV tables and a figure")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"duabe: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, MissingParamsError, RefusesOverwriteError) as exc:
        print(f"duabe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    except DuAbeError as exc:
        print(f"duabe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CRYPTO
    except OSError as exc:
        print(f"duabe: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
