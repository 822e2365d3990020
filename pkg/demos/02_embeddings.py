#!/usr/bin/env python3
"""Train token vectors on a tiny corpus and compose fragment embeddings.

Two contracts that share structure end up with similar fragment vectors;
an unrelated one lands further away. Fragment vectors are plain sums of
token vectors, so they are order-independent and linear."""

import numpy as np

from solembed import (Hyperparams, embed_stream, extract_fragments,
                      parse_text, similarity, train_embeddings)

WALLET = """\
contract Wallet%d {
    mapping(address => uint) balances;
    function deposit() public payable { balances[msg.sender] += msg.value; }
    function withdraw(uint amount) public {
        require(balances[msg.sender] >= amount);
        balances[msg.sender] -= amount;
        msg.sender.transfer(amount);
    }
}
"""

COUNTER = """\
contract Tally {
    uint hits = 0;
    function ping() public { hits = hits + 1; }
}
"""


def contract_stream(source):
    root, _ = parse_text(source)
    return next(f.stream for f in extract_fragments(root, "d")
                if f.granularity == "contract")


if __name__ == "__main__":
    corpus = [contract_stream(WALLET % i) for i in range(8)]
    corpus.append(contract_stream(COUNTER))
    table = train_embeddings(
        corpus, Hyperparams(dim=48, epochs=8, min_count=1, seed=4))
    print(f"vocabulary: {len(table.vocab)} tokens, dimension {table.dim}")

    nearest = sorted(
        ((similarity(table.vector("balances"), table.vector(t)), t)
         for t in table.vocab.tokens if t != "balances"), reverse=True)
    print("tokens closest to 'balances':",
          ", ".join(t for _, t in nearest[:5]))

    wallet_a = embed_stream(contract_stream(WALLET % 1), table)
    wallet_b = embed_stream(contract_stream(WALLET % 2), table)
    tally = embed_stream(contract_stream(COUNTER), table)
    print(f"wallet vs wallet  similarity: "
          f"{similarity(wallet_a.vector, wallet_b.vector):.4f}")
    print(f"wallet vs counter similarity: "
          f"{similarity(wallet_a.vector, tally.vector):.4f}")

    # composition is a sum: splitting a stream and adding the halves
    # reproduces the whole within float tolerance
    stream = contract_stream(WALLET % 3)
    whole = embed_stream(stream, table).vector
    halves = (embed_stream(stream[:10], table).vector
              + embed_stream(stream[10:], table).vector)
    print("sum composition max deviation:",
          float(np.max(np.abs(whole - halves))))
