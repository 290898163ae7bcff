"""Normalization and canonical forms for pi processes.

States are kept as a "soup": a tuple of restricted names over a flat list
of parallel components, each component a prefix, a replicated input, or a
constant application.  Normalization:

  * desugars bound outputs per dialect (full pi: new b in a!(b).P;
    ALpi: new b in (a!(b) | P); Internal pi keeps them primitive),
  * beta-reduces inline abstraction applications,
  * flattens parallel composition, drops Nil, hoists restrictions to the
    soup top (standard scope extension, alpha-freshening as needed),
  * garbage-collects input-guarded components on restricted names that no
    component can ever output at or export (they can neither fire nor
    become observable under the ground LTS),
  * refolds constant bodies back into constant applications, and
    compresses restricted forwarder chains K<a,b> | K<b,c> into K<a,c>
    (the standard wire law; keeps unfolding encodings finite-state),
  * orders components canonically.

Canonical keys identify soups up to alpha; pair keys additionally rename
free names jointly by first occurrence, which is sound for memoization
because the transition system is equivariant under injective renamings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .dialects import Dialect
from .syntax import (
    Apply, BoundOutput, ConstantEnv, EqVar, Input, Name, Nil, Output,
    Parallel, PiAbstraction, Proc, ReplicatedInput, Restriction, fn,
    instantiate, parallel_all, rename, restrict_all,
)


@dataclass
class NormConfig:
    dialect: Dialect = Dialect.INTERNAL
    gc: bool = True
    compress_links: bool = True
    # constants treated as one-directional forwarders (receive at arg 0,
    # resend at arg 1) for chain compression
    link_constants: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Soup:
    restricted: tuple[Name, ...]
    components: tuple[Proc, ...]

    def to_proc(self) -> Proc:
        got = self.__dict__.get("_proc")
        if got is None:
            got = restrict_all(self.restricted, parallel_all(list(self.components)))
            object.__setattr__(self, "_proc", got)
        return got


def all_names(p: Proc) -> set[Name]:
    out: set[Name] = set()

    def go(q: Proc):
        match q:
            case Nil():
                pass
            case Input(a, xs, b) | ReplicatedInput(a, xs, b):
                out.add(a)
                out.update(xs)
                go(b)
            case Output(a, bs, b) | BoundOutput(a, bs, b):
                out.add(a)
                out.update(bs)
                go(b)
            case Restriction(n, b):
                out.add(n)
                go(b)
            case Parallel(l, r):
                go(l)
                go(r)
            case Apply(t, args):
                out.update(args)
                if isinstance(t, PiAbstraction):
                    out.update(t.params)
                    go(t.body)
    go(p)
    return out


# ---------------------------------------------------------------------------
# Occurrence roles.  "is": input subject, "os": output subject,
# "oo": output object (exported).  Roles of constant parameters are computed
# transitively to a fixpoint; equation variables get all roles (opaque).

_ALL_ROLES = frozenset(("is", "os", "oo"))

_role_cache: dict[int, tuple[tuple, dict[str, tuple[frozenset[str], ...]]]] = {}


def _env_fingerprint(env: ConstantEnv) -> tuple:
    return tuple(sorted(env.keys()))


def env_param_roles(env: ConstantEnv) -> dict[str, tuple[frozenset[str], ...]]:
    cached = _role_cache.get(id(env))
    if cached and cached[0] == _env_fingerprint(env):
        return cached[1]
    roles = {k: tuple(frozenset() for _ in a.params) for k, a in env.items()}
    changed = True
    while changed:
        changed = False
        for k, a in env.items():
            acc: dict[Name, set[str]] = {p: set() for p in a.params}
            _scan_roles(a.body, env, roles, acc, frozenset())
            new = tuple(frozenset(acc.get(p, set())) for p in a.params)
            if new != roles[k]:
                roles[k] = new
                changed = True
    _role_cache[id(env)] = (_env_fingerprint(env), roles)
    return roles


def _scan_roles(p: Proc, env: ConstantEnv,
                const_roles: dict[str, tuple[frozenset[str], ...]],
                acc: dict[Name, set[str]], bound: frozenset[Name]):
    def mark(n: Name, role: str):
        if n not in bound:
            acc.setdefault(n, set()).add(role)

    match p:
        case Nil():
            pass
        case Input(a, xs, b) | ReplicatedInput(a, xs, b):
            mark(a, "is")
            _scan_roles(b, env, const_roles, acc, bound | frozenset(xs))
        case Output(a, bs, b):
            mark(a, "os")
            for o in bs:
                mark(o, "oo")
            _scan_roles(b, env, const_roles, acc, bound)
        case BoundOutput(a, bs, b):
            mark(a, "os")
            _scan_roles(b, env, const_roles, acc, bound | frozenset(bs))
        case Restriction(n, b):
            _scan_roles(b, env, const_roles, acc, bound | {n})
        case Parallel(l, r):
            _scan_roles(l, env, const_roles, acc, bound)
            _scan_roles(r, env, const_roles, acc, bound)
        case Apply(t, args):
            if isinstance(t, EqVar):
                for a_ in args:
                    for r in _ALL_ROLES:
                        mark(a_, r)
            elif isinstance(t, str):
                prms = const_roles.get(t)
                if prms is None:
                    for a_ in args:
                        for r in _ALL_ROLES:
                            mark(a_, r)
                else:
                    for a_, rs in zip(args, prms):
                        for r in rs:
                            mark(a_, r)
            else:
                _scan_roles(t.body, env, const_roles, acc,
                            bound | frozenset(t.params))
                for a_ in args:
                    for r in _ALL_ROLES:
                        mark(a_, r)


def name_roles(comps, env: ConstantEnv) -> dict[Name, set[str]]:
    const_roles = env_param_roles(env)
    acc: dict[Name, set[str]] = {}
    for c in comps:
        part = c.__dict__.get("_roles")
        if part is None or part[0] is not const_roles:
            local: dict[Name, set[str]] = {}
            _scan_roles(c, env, const_roles, local, frozenset())
            part = (const_roles, local)
            object.__setattr__(c, "_roles", part)
        for n, rs in part[1].items():
            acc.setdefault(n, set()).update(rs)
    return acc


def _free_occurrences(p: Proc, n: Name, bound: frozenset[Name]) -> int:
    if n in bound:
        return 0
    match p:
        case Nil():
            return 0
        case Input(a, xs, b) | ReplicatedInput(a, xs, b):
            return (a == n) + _free_occurrences(b, n, bound | frozenset(xs))
        case Output(a, bs, b):
            return (a == n) + sum(o == n for o in bs) + _free_occurrences(b, n, bound)
        case BoundOutput(a, bs, b):
            return (a == n) + _free_occurrences(b, n, bound | frozenset(bs))
        case Restriction(m, b):
            return _free_occurrences(b, n, bound | {m})
        case Parallel(l, r):
            return _free_occurrences(l, n, bound) + _free_occurrences(r, n, bound)
        case Apply(t, args):
            k = sum(a == n for a in args)
            if isinstance(t, PiAbstraction):
                k += _free_occurrences(t.body, n, bound | frozenset(t.params))
            return k
    raise TypeError(f"not a pi process: {p!r}")


# ---------------------------------------------------------------------------
# Soup construction


def _cfg_key(env: ConstantEnv, cfg: NormConfig):
    return (cfg.dialect.value, cfg.gc, cfg.compress_links, id(env))


def soup_of(p: Proc, env: ConstantEnv, cfg: NormConfig) -> Soup:
    ckey = _cfg_key(env, cfg)
    cache = p.__dict__.get("_soups")
    if cache is not None:
        got = cache.get(ckey)
        if got is not None:
            return got
    soup = _soup_of(p, env, cfg)
    if cache is None:
        cache = {}
        object.__setattr__(p, "_soups", cache)
    cache[ckey] = soup
    # the rebuilt process is already normal: attach the soup there too
    rebuilt = soup.to_proc()
    rcache = rebuilt.__dict__.get("_soups")
    if rcache is None:
        rcache = {}
        object.__setattr__(rebuilt, "_soups", rcache)
    rcache.setdefault(ckey, soup)
    return soup


def _soup_of(p: Proc, env: ConstantEnv, cfg: NormConfig) -> Soup:
    # only spine restrictions hoist, so only they need freshening; prefix
    # bodies normalize as their own soups
    avoid = set(fn(p))
    restricted: list[Name] = []
    comps: list[Proc] = []
    _gather(p, env, cfg, restricted, comps, avoid)
    if cfg.gc or cfg.compress_links:
        restricted, comps = _passes(restricted, comps, env, cfg)
    # drop restrictions on names that no longer occur
    occurring = set().union(*(fn(c) for c in comps)) if comps else set()
    live = set(restricted) & occurring
    comps = _order(comps)
    # restrict in order of first occurrence for a stable printed form
    ordered: list[Name] = []
    placed: set[Name] = set()
    for c in comps:
        if len(placed) == len(live):
            break
        here = sorted(n for n in fn(c) if n in live and n not in placed)
        ordered.extend(here)
        placed.update(here)
    return Soup(tuple(ordered), tuple(comps))


def _gather(p: Proc, env: ConstantEnv, cfg: NormConfig,
            restricted: list[Name], comps: list[Proc], avoid: set[Name]):
    match p:
        case Nil():
            return
        case Parallel(l, r):
            _gather(l, env, cfg, restricted, comps, avoid)
            _gather(r, env, cfg, restricted, comps, avoid)
        case Restriction(n, b):
            if n in avoid:  # clashes with free names or earlier spine binders
                n2 = _fresh_like(n, avoid)
                b = rename(b, {n: n2})
                n = n2
            avoid.add(n)
            restricted.append(n)
            _gather(b, env, cfg, restricted, comps, avoid)
        case Apply(t, args) if isinstance(t, PiAbstraction):
            _gather(instantiate(t, args), env, cfg, restricted, comps, avoid)
        case BoundOutput(a, bs, b) if cfg.dialect is not Dialect.INTERNAL:
            # desugar: full pi keeps the continuation under the prefix,
            # ALpi splits particle and continuation in parallel
            sub = {}
            bs2 = []
            for o in bs:
                if o in avoid:
                    o2 = _fresh_like(o, avoid)
                    sub[o] = o2
                    o = o2
                avoid.add(o)
                bs2.append(o)
            if sub:
                b = rename(b, sub)
            restricted.extend(bs2)
            if cfg.dialect is Dialect.ALPI:
                comps.append(Output(a, tuple(bs2), Nil()))
                _gather(b, env, cfg, restricted, comps, avoid)
            else:
                _gather(Output(a, tuple(bs2), b), env, cfg, restricted, comps, avoid)
        case Input(a, xs, b):
            comps.append(Input(a, xs, normalize(b, env, cfg)))
        case ReplicatedInput(a, xs, b):
            comps.append(ReplicatedInput(a, xs, normalize(b, env, cfg)))
        case Output(a, bs, b):
            comps.append(Output(a, bs, normalize(b, env, cfg)))
        case BoundOutput(a, bs, b):
            comps.append(BoundOutput(a, bs, normalize(b, env, cfg)))
        case Apply(_, _):
            comps.append(p)
        case _:
            raise TypeError(f"not a pi process: {p!r}")


def _fresh_like(n: Name, avoid: set[Name]) -> Name:
    stem = n.text.rstrip("0123456789")
    i = 1
    while Name(f"{stem}{i}", n.sort) in avoid:
        i += 1
    return Name(f"{stem}{i}", n.sort)


# ---------------------------------------------------------------------------
# GC + refolding + chain compression, iterated to a fixpoint


_pattern_cache: dict[tuple[int, str], tuple[tuple, dict[str, Proc]]] = {}


def _refold_patterns(env: ConstantEnv, cfg: NormConfig) -> dict[str, Proc]:
    """Normalized constant bodies, used to fold fired copies back into
    constant applications (keeps recursive-constant states compact)."""
    key = (id(env), cfg.dialect.value)
    cached = _pattern_cache.get(key)
    if cached and cached[0] == _env_fingerprint(env):
        return cached[1]
    plain = NormConfig(dialect=cfg.dialect, gc=False, compress_links=False)
    pats = {k: soup_of(a.body, {}, plain).to_proc() for k, a in env.items()}
    _pattern_cache[key] = (_env_fingerprint(env), pats)
    return pats


def _passes(restricted: list[Name], comps: list[Proc], env: ConstantEnv,
            cfg: NormConfig) -> tuple[list[Name], list[Proc]]:
    patterns = _refold_patterns(env, cfg) if env else {}
    changed = True
    while changed:
        changed = False
        if env:
            comps2 = [_refold(c, env, patterns) for c in comps]
            if comps2 != comps:
                comps = comps2
                changed = True
        if cfg.gc:
            roles = name_roles(comps, env)
            rset = set(restricted)
            dead = {n for n in rset
                    if "os" not in roles.get(n, set()) and "oo" not in roles.get(n, set())}
            if dead:
                kept = [c for c in comps if _guard_subject(c, env) not in dead]
                if len(kept) != len(comps):
                    comps = kept
                    changed = True
        if cfg.compress_links and cfg.link_constants:
            res = _compress_links(restricted, comps, cfg)
            if res is not None:
                restricted, comps = res
                changed = True
    return restricted, comps


def _guard_subject(c: Proc, env: ConstantEnv) -> Optional[Name]:
    match c:
        case Input(a, _, _) | ReplicatedInput(a, _, _):
            return a
        case Apply(t, args) if isinstance(t, str) and t in env:
            body = env[t].body
            if isinstance(body, (Input, ReplicatedInput)):
                try:
                    return args[env[t].params.index(body.subject)]
                except ValueError:
                    return None
    return None


def _refold(c: Proc, env: ConstantEnv, patterns: dict[str, Proc]) -> Proc:
    if isinstance(c, Apply):
        return c
    got = c.__dict__.get("_refold")
    if got is not None and got[0] is patterns:
        return got[1]
    out = c
    for k, a in env.items():
        pat = patterns[k]
        if type(pat) is not type(c):
            continue
        binding = _match(pat, c, {p: None for p in a.params}, {}, {})
        if binding is not None:
            args = tuple(binding.get(p) for p in a.params)
            if any(v is None for v in args):
                continue
            out = Apply(k, args)
            break
    object.__setattr__(c, "_refold", (patterns, out))
    return out


def _match(pat: Proc, q: Proc, meta: dict, pb: dict, qb: dict) -> Optional[dict]:
    """Match q against constant-body pattern pat; meta maps constant params
    to the names they capture, pb/qb align binders."""
    def mn(pn: Name, qn: Name, meta) -> Optional[dict]:
        if pn in pb or qn in qb:
            return meta if pb.get(pn) == qn and qb.get(qn) == pn else None
        if pn in meta:
            if meta[pn] is None:
                if qn.sort != pn.sort:
                    return None
                meta = dict(meta)
                meta[pn] = qn
                return meta
            return meta if meta[pn] == qn else None
        return meta if pn == qn else None

    def bind(pns, qns):
        if len(pns) != len(qns):
            return None
        pb2, qb2 = dict(pb), dict(qb)
        for pn, qn in zip(pns, qns):
            pb2[pn] = qn
            qb2[qn] = pn
        return pb2, qb2

    match pat, q:
        case (Nil(), Nil()):
            return meta
        case (Input(pa, pxs, pbod), Input(qa, qxs, qbod)) \
                | (ReplicatedInput(pa, pxs, pbod), ReplicatedInput(qa, qxs, qbod)) \
                | (BoundOutput(pa, pxs, pbod), BoundOutput(qa, qxs, qbod)):
            if type(pat) is not type(q):
                return None
            meta = mn(pa, qa, meta)
            if meta is None:
                return None
            b = bind(pxs, qxs)
            if b is None:
                return None
            return _match(pbod, qbod, meta, b[0], b[1])
        case (Output(pa, pbs, pbod), Output(qa, qbs, qbod)):
            meta = mn(pa, qa, meta)
            if meta is None or len(pbs) != len(qbs):
                return None
            for pn, qn in zip(pbs, qbs):
                meta = mn(pn, qn, meta)
                if meta is None:
                    return None
            return _match(pbod, qbod, meta, pb, qb)
        case (Restriction(pn, pbod), Restriction(qn, qbod)):
            b = bind((pn,), (qn,))
            if b is None:
                return None
            return _match(pbod, qbod, meta, b[0], b[1])
        case (Parallel(pl, pr), Parallel(ql, qr)):
            meta2 = _match(pl, ql, meta, pb, qb)
            if meta2 is None:
                return None
            return _match(pr, qr, meta2, pb, qb)
        case (Apply(pt, pargs), Apply(qt, qargs)):
            if isinstance(pt, str) and isinstance(qt, str) and pt == qt \
                    and len(pargs) == len(qargs):
                for pn, qn in zip(pargs, qargs):
                    meta = mn(pn, qn, meta)
                    if meta is None:
                        return None
                return meta
            return None
    return None


def _compress_links(restricted: list[Name], comps: list[Proc],
                    cfg: NormConfig) -> Optional[tuple[list[Name], list[Proc]]]:
    """new b in (K<a,b> | K<b,c> | R)  ->  K<a,c> | R  when b is otherwise
    unused (received-at-b traffic can only come through the first link)."""
    links = {}
    for i, c in enumerate(comps):
        if isinstance(c, Apply) and isinstance(c.target, str) \
                and c.target in cfg.link_constants and len(c.args) == 2:
            links[i] = c
    if not links:
        return None
    for b in restricted:
        into = [i for i, c in links.items() if c.args[1] == b]
        outof = [i for i, c in links.items() if c.args[0] == b]
        if len(into) == 1 and len(outof) == 1 and into[0] != outof[0]:
            i, j = into[0], outof[0]
            a, cc = links[i].args[0], links[j].args[1]
            if a == b or cc == b:
                continue
            occurrences = sum(_free_occurrences(c, b, frozenset()) for c in comps)
            if occurrences != 2:
                continue
            if links[i].target != links[j].target:
                continue
            merged = Apply(links[i].target, (a, cc))
            comps2 = [c for k, c in enumerate(comps) if k not in (i, j)]
            comps2.append(merged)
            return [n for n in restricted if n != b], comps2
    return None


# ---------------------------------------------------------------------------
# Canonical ordering and keys


def _ckey(p: Proc, benv: dict[Name, int], lvl: list[int],
          fkey: Callable[[Name], tuple]):
    def nk(n: Name):
        if n in benv:
            return ("b", benv[n])
        return fkey(n)

    def enter(ns):
        saved = [(n, benv.get(n)) for n in ns]
        for n in ns:
            benv[n] = lvl[0]
            lvl[0] += 1
        return saved

    def leave(saved):
        for n, old in saved:
            if old is None:
                benv.pop(n, None)
            else:
                benv[n] = old

    match p:
        case Nil():
            return ("nil",)
        case Input(a, xs, b):
            sk = nk(a)
            sv = enter(xs)
            out = ("in", sk, len(xs), _ckey(b, benv, lvl, fkey))
            leave(sv)
            return out
        case ReplicatedInput(a, xs, b):
            sk = nk(a)
            sv = enter(xs)
            out = ("rep", sk, len(xs), _ckey(b, benv, lvl, fkey))
            leave(sv)
            return out
        case Output(a, bs, b):
            return ("out", nk(a), tuple(nk(x) for x in bs), _ckey(b, benv, lvl, fkey))
        case BoundOutput(a, bs, b):
            sk = nk(a)
            sv = enter(bs)
            out = ("bout", sk, len(bs), _ckey(b, benv, lvl, fkey))
            leave(sv)
            return out
        case Restriction(n, b):
            sv = enter((n,))
            out = ("res", _ckey(b, benv, lvl, fkey))
            leave(sv)
            return out
        case Parallel(l, r):
            return ("par", _ckey(l, benv, lvl, fkey), _ckey(r, benv, lvl, fkey))
        case Apply(t, args):
            if isinstance(t, EqVar):
                tk = ("X", t.index)
            elif isinstance(t, str):
                tk = ("K", t)
            else:
                sv = enter(t.params)
                tk = ("A", len(t.params), _ckey(t.body, benv, lvl, fkey))
                leave(sv)
            return ("app", tk, tuple(nk(x) for x in args))
    raise TypeError(f"not a pi process: {p!r}")


def _order(comps: list[Proc]) -> list[Proc]:
    def key(c: Proc):
        got = c.__dict__.get("_okey")
        if got is None:
            erased = _ckey(c, {}, [0], lambda n: ("f", n.sort))
            exact = _ckey(c, {}, [0], lambda n: ("f", n.text, n.sort))
            got = (repr(erased), repr(exact))
            object.__setattr__(c, "_okey", got)
        return got
    return sorted(comps, key=key)


def canon_soup(soup: Soup, free_map: Optional[dict[Name, int]] = None):
    if free_map is None:
        got = soup.__dict__.get("_canon")
        if got is not None:
            return got
    rset = set(soup.restricted)
    idx: dict[Name, int] = {}

    def fkey(n: Name):
        if n in rset:
            if n not in idx:
                idx[n] = len(idx)
            return ("r", idx[n], n.sort)
        if free_map is None:
            return ("f", n.text, n.sort)
        if n not in free_map:
            free_map[n] = len(free_map)
        return ("f", free_map[n], n.sort)

    out = ("soup", tuple(_ckey(c, {}, [0], fkey) for c in soup.components))
    if free_map is None:
        object.__setattr__(soup, "_canon", out)
    return out


def normalize(p: Proc, env: ConstantEnv, cfg: NormConfig) -> Proc:
    return soup_of(p, env, cfg).to_proc()


def canon_proc(p: Proc, env: ConstantEnv, cfg: NormConfig):
    """Key identifying p up to alpha and structural normalization."""
    return canon_soup(soup_of(p, env, cfg))


def canon_pair_proc(p: Proc, q: Proc, env: ConstantEnv, cfg: NormConfig):
    """Pair key up to a joint injective renaming of free names."""
    fm: dict[Name, int] = {}
    return (canon_soup(soup_of(p, env, cfg), fm),
            canon_soup(soup_of(q, env, cfg), fm))
