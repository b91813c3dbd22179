"""Self-checks: the verify suite, with and without an injected defect.

The suite runs three kinds of check. A brute-force pass over random subsystem
sets confirms that the back-projection and reconstruction rules hold node by
node. An analytic 1-D case checks the solver. An independent semi-Lagrangian
oracle cross-checks a 2-D Dubins subsystem. The ``reconstruct_sign_flip``
fault swaps in a broken reconstruction to show that the suite catches it.

Run: python3 demos/verification.py
"""

from scsreach.app import cmd_verify


def show(report):
    for check in report["checks"]:
        extra = f"{check['violations']} violations" if "violations" in check else \
            f"error {check.get('max_error', check.get('max_gap')):.2e} vs {check['tolerance']:.2e}"
        print(f"  {'ok  ' if check['passed'] else 'FAIL'} {check['name']}: {extra}")
    print(f"  overall: {'passed' if report['passed'] else 'failed'}")


print("clean run")
show(cmd_verify())
print("with reconstruct_sign_flip injected")
show(cmd_verify(fault="reconstruct_sign_flip"))
