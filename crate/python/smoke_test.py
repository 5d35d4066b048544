"""Smoke test for the Python bindings. Run after installing the wheel:

    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/nominal_au_py-*.whl
    python python/smoke_test.py
"""

import nominal_au_py as nau


def main():
    # A commutative symbol ignores argument order.
    assert nau.check("f(A, B)", "f(B, A)", sig="f:C/2", atomvars="A B")
    assert not nau.check("f(A, B)", "f(B, A)", sig="f:/2", atomvars="A B")

    # Freshness: a bound atom is fresh, a distinct one only when constrained.
    assert nau.check_fresh("A", "lam A. A", atomvars="A")
    assert not nau.check_fresh("A", "B", atomvars="A B")
    assert nau.check_fresh("A", "B", atomvars="A B", fresh="A # B")

    # Generalizing f(c1, A) and f(c2, A) keeps the shared atom.
    items = nau.generalize("f(c1, A)", "f(c2, A)", sig="f:/2, c1:/0, c2:/0", atomvars="A", minimize=True)
    assert len(items) == 1
    term = items[0]["term"]
    assert term["kind"] == "app" and term["symbol"]["name"] == "f", term
    assert term["args"][1] == {"kind": "atom", "perm": [], "var": "A"}, term

    # Equivariance: A -> B, B -> C is a renaming only when all three differ.
    found = nau.equiv([("f(A, B)", "f(B, C)")], sig="f:/2", atomvars="A B C", fresh="A # B, B # C, A # C")
    assert found, found

    # Unique lgg for AC terms with two shared constants.
    sig = "f:AC/2, s1:/0, s2:/0, s3:/0, s4:/0, s5:/0, s6:/0"
    assert nau.unique("f(s1,s2,s3,s4)", "f(s5,s6,s1,s2)", sig=sig) == "f(s1, s2, X1, X2)"

    # Whole problem files, in both result formats.
    problem = "sig: f:AC/2;\natomvars: A B;\nfresh: A # B;\ngeneralize lam A. f(A,A,B) =?= lam B. f(A,B,A);\n"
    doc = nau.run(problem, minimize=True)
    assert doc["exit_code"] == 0
    assert doc["format"] == "nau-result"
    assert len(doc["results"][0]["outcome"]["items"]) == 2
    text = nau.render_result(problem, minimize=True)
    assert text.count("\ngen ") == 2, text

    tree = nau.parse_term("(A B)*X", atomvars="A B", termvars="X")
    assert tree["kind"] == "var" and tree["name"] == "X", tree

    try:
        nau.check("f(A)", "A", sig="f:/2", atomvars="A")
    except ValueError:
        pass
    else:
        raise AssertionError("arity errors raise ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
