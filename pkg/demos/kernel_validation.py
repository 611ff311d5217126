"""What the kernel validator can and cannot certify.

Each kernel family declares a hypothesis class and the validator samples
every declared condition on a probe lattice. Two things are worth
seeing explicitly:

* the constant/linear family passes everything;
* the default power-law family honestly FAILS one condition - the
  large-size mass-fraction bound on the daughter density. Uniform
  daughters put half the parent mass above any fixed floor as the
  parent grows, and the strict version of the condition is not
  attainable there. The validator reports the failure instead of
  softening the check; callers who accept the family anyway do so
  knowingly.

Asymptotic conditions are sampled, not proved: the report's detail
strings say so.
"""

from prionpde import (
    ModelParams,
    make_bounded_family,
    make_powerlaw_family,
    make_special_family,
    validate_kernel_set,
)

params = ModelParams(production=1.0, degradation=0.5, saturation=0.0,
                     min_size=1.0)

for label, k in (
    ("constant/linear", make_special_family(1.0, 0.1, 0.5, 0.2, params)),
    ("bounded", make_bounded_family(1.0, 0.1, 0.3, 0.05, params)),
    ("power-law (defaults)", make_powerlaw_family(params=params)),
):
    report = validate_kernel_set(k)
    print(f"--- {label}")
    print(report.format())
    verdict = "all hypotheses hold" if report.all_passed else \
        f"{len(report.failures())} check(s) fail - see above"
    print(f"==> {verdict}\n")
