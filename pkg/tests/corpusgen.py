"""Deterministic synthetic Solidity corpora for the test suite.

Everything is driven by a seeded random.Random so test runs are
reproducible. Identifier pools are intentionally small: names recur
across contracts, which keeps them in-vocabulary the way real Solidity
corpora repeat ERC20-style names.
"""

from __future__ import annotations

import random
import re

NOUNS = ["Token", "Wallet", "Escrow", "Auction", "Crowdsale", "Registry",
         "Vault", "Market", "Bank", "Exchange", "Fund", "Pool", "Bridge",
         "Ledger", "Staking", "Voting", "Lending", "Treasury", "Insurance",
         "Lockbox"]
VARS = ["balance", "total", "supply", "rate", "cap", "limit", "fee",
        "price", "amount", "count", "share", "stake", "reward", "quota"]
FUNCS = ["deposit", "release", "update", "configure", "register", "claim",
         "settle", "sync", "close", "open", "adjust", "record"]

BUG_STATEMENT = "uint winner = uint(blockhash(block.number - 1)) % ticketCount;"
BUG_STATEMENT_MUTATED = "uint winner = uint(blockhash(block.number - 7)) % ticketCount;"


def _statement(rng: random.Random, vars_in_scope: list[str]) -> str:
    v = rng.choice(vars_in_scope)
    w = rng.choice(vars_in_scope)
    n = rng.randint(1, 9999)
    m = rng.randint(1, 9999)
    forms = [
        f"{v} = {w} + {n};",
        f"{v} = {v} * {n};",
        f"{v} += {n};",
        f"require({v} >= {n});",
        f"require(msg.sender != address(0));",
        f"if ({v} > {n}) {{ {w} = {m}; }}",
        f"for (uint i = 0; i < {n % 40}; i++) {{ {w} += {m}; }}",
        f"holdings[msg.sender] = {v} - {n};",
        f"emit Changed({v}, {n});",
        f"{v} = {w} > {n} ? {m} : {v};",
    ]
    return rng.choice(forms)


def generate_contract(rng: random.Random, idx: int,
                      functions: int | None = None,
                      statements_per_function: tuple[int, int] = (2, 5),
                      planted_statement: str | None = None) -> str:
    """One self-contained contract with pools of recurring identifiers."""
    name = f"{rng.choice(NOUNS)}{idx}"
    vars_in_scope = rng.sample(VARS, 4)
    if functions is None:
        functions = rng.randint(2, 4)
    lines = [
        "pragma solidity ^0.4.24;",
        "",
        f"contract {name} {{",
        f"    uint public {vars_in_scope[0]} = {rng.randint(1, 100000)};",
        f"    uint {vars_in_scope[1]};",
        f"    uint {vars_in_scope[2]};",
        f"    uint {vars_in_scope[3]};",
        "    mapping(address => uint) holdings;",
        "    event Changed(uint a, uint b);",
        "",
    ]
    chosen_funcs = rng.sample(FUNCS, min(functions, len(FUNCS)))
    plant_in = rng.randrange(len(chosen_funcs)) if planted_statement else -1
    for fi, fname in enumerate(chosen_funcs):
        lines.append(f"    function {fname}(uint value) public {{")
        for _ in range(rng.randint(*statements_per_function)):
            lines.append("        " + _statement(rng, vars_in_scope))
        if fi == plant_in:
            lines.append("        " + planted_statement)
        lines.append("    }")
        lines.append("")
    lines.append("}")
    return "\n".join(lines) + "\n"


def generate_corpus(n: int, seed: int) -> list[tuple[str, str]]:
    rng = random.Random(seed)
    return [(f"c{idx:03d}.sol", generate_contract(rng, idx))
            for idx in range(n)]


def mutate_literals(text: str, shift: int = 3) -> str:
    """Change every standalone integer literal, leaving the pragma alone."""
    def bump(match: re.Match) -> str:
        return str(int(match.group(0)) + shift)

    lines = text.split("\n")
    body = [lines[0]] + [re.sub(r"(?<![\w.])\d+(?![\w.])", bump, line)
                         for line in lines[1:]]
    return "\n".join(body)


def clone_study_corpus(seed: int, n_total: int = 100, n_exact: int = 15,
                       n_mutated: int = 15):
    """Corpus with injected clone relations and the ground-truth log.

    Returns (files, injected) where injected holds
    (original_name, clone_name, kind) with kind in {exact, mutated}.
    Exact copies get a unique trailing comment so their file bytes differ
    (the store dedups identical bytes) while their token streams do not.
    """
    rng = random.Random(seed)
    n_base = n_total - n_exact - n_mutated
    files = [(f"base{idx:03d}.sol", generate_contract(rng, idx))
             for idx in range(n_base)]
    injected: list[tuple[str, str, str]] = []
    originals = rng.sample(range(n_base), n_exact + n_mutated)
    for i, orig_idx in enumerate(originals[:n_exact]):
        orig_name, orig_text = files[orig_idx]
        clone_name = f"exact{i:03d}.sol"
        files.append((clone_name, orig_text + f"// replica {i}\n"))
        injected.append((orig_name, clone_name, "exact"))
    for i, orig_idx in enumerate(originals[n_exact:]):
        orig_name, orig_text = files[orig_idx]
        clone_name = f"mut{i:03d}.sol"
        files.append((clone_name, mutate_literals(orig_text) + f"// variant {i}\n"))
        injected.append((orig_name, clone_name, "mutated"))
    return files, injected


def bug_study_corpus(seed: int, n_clean: int = 90, n_verbatim: int = 5,
                     n_mutated: int = 5):
    """Corpus with one bug statement planted in 10 of 100 contracts.

    Returns (files, planted_names). The planted statement appears verbatim
    in n_verbatim contracts and with a mutated numeric literal in
    n_mutated; both normalize to the same stream.
    """
    rng = random.Random(seed)
    files = []
    planted: list[str] = []
    for idx in range(n_clean):
        files.append((f"clean{idx:03d}.sol", generate_contract(rng, idx)))
    for i in range(n_verbatim):
        name = f"planted_v{i:02d}.sol"
        files.append((name, generate_contract(
            rng, 1000 + i, planted_statement=BUG_STATEMENT)))
        planted.append(name)
    for i in range(n_mutated):
        name = f"planted_m{i:02d}.sol"
        files.append((name, generate_contract(
            rng, 2000 + i, planted_statement=BUG_STATEMENT_MUTATED)))
        planted.append(name)
    return files, planted
