#!/usr/bin/env python3
"""Walk a contract through the front of the pipeline: tokens, parse tree,
fragments, and the normalized streams that all later stages consume."""

from solembed import extract_fragments, format_ast, parse_text, tokenize

SOURCE = """\
pragma solidity ^0.4.24;

contract PiggyBank {
    address owner = 0x52908400098527886E0F7030069857D2E4169EE7;
    uint totalSaved = 100;

    function save() public payable {
        totalSaved += msg.value;
    }

    function crack(uint amount) public {
        require(msg.sender == owner);
        if (amount <= totalSaved) {
            totalSaved = totalSaved - amount;
        }
    }
}
"""

if __name__ == "__main__":
    tokens, lex_diags = tokenize(SOURCE)
    print(f"{len(tokens)} tokens, first five:")
    for tok in tokens[:5]:
        print(f"  {tok.kind:<14} {tok.lexeme!r} @ {tok.line}:{tok.col}")

    root, diags = parse_text(SOURCE)
    print(f"\nparse tree ({len(diags)} diagnostics):")
    print(format_ast(root))

    fragments = extract_fragments(root, "piggy")
    print("\nfragments:")
    for frag in fragments:
        print(f"  {frag.granularity:<9} {frag.fragment_id} "
              f"lines {frag.span[0]}-{frag.span[2]}")

    print("\nnormalized statement streams (note ADDR/NUM in place of values):")
    for frag in fragments:
        if frag.granularity == "statement":
            print(" ", " ".join(frag.stream))

    # the same statement with different literals normalizes identically
    a, _ = parse_text("contract A { function f() public { x = 5; } }")
    b, _ = parse_text("contract A { function f() public { x = 77; } }")
    sa = [f.stream for f in extract_fragments(a, "a")
          if f.granularity == "statement"]
    sb = [f.stream for f in extract_fragments(b, "b")
          if f.granularity == "statement"]
    print("\nliteral-blindness:", "x = 5 and x = 77 agree" if sa == sb
          else "streams differ (unexpected!)")
