#!/usr/bin/env python3
# tools/penalty_oracle.py

# Copyright 2026  The atts2s Authors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

# Writes a C++ header with the guided-attention penalty
# 1 - exp(-delta^2 / (2 sigma^2)) evaluated in 50-digit decimal arithmetic.
# Usage: penalty_oracle.py OUTPUT_HEADER

import decimal
import sys

CASES = [("kOraclePenaltyNear", "0.4", "0.4"), ("kOraclePenaltyFar", "1.0", "0.4")]


def penalty(delta, sigma):
    d, s = decimal.Decimal(delta), decimal.Decimal(sigma)
    return 1 - (-(d * d) / (2 * s * s)).exp()


def main():
    if len(sys.argv) != 2:
        sys.exit("usage: penalty_oracle.py OUTPUT_HEADER")
    decimal.getcontext().prec = 50
    lines = [
        "// Generated by tools/penalty_oracle.py; do not edit.",
        "#ifndef ATTS2S_PENALTY_ORACLE_H_",
        "#define ATTS2S_PENALTY_ORACLE_H_",
        "#define ATTS2S_HAVE_PENALTY_ORACLE 1",
        "namespace atts2s {",
    ]
    for name, delta, sigma in CASES:
        lines.append("// delta = %s, sigma = %s" % (delta, sigma))
        lines.append("constexpr double %s = %s;" % (name, penalty(delta, sigma)))
    lines += ["}  // namespace atts2s", "#endif  // ATTS2S_PENALTY_ORACLE_H_", ""]
    with open(sys.argv[1], "w") as out:
        out.write("\n".join(lines))


if __name__ == "__main__":
    main()
