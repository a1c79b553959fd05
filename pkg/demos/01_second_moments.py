"""Exact second moments from the renewal recursion.

Shows how slowly E[W_N^2] creeps toward its large-N limit 1 / (1 - beta_hat^2),
and how the per-window variances of the dyadic factors add up to
log(1 / (1 - beta_hat^2)).
"""
import math

from dpre2d.oracle import collision_weight, exact_second_moment, lambda_limit, moment_table
from dpre2d.walk import overlap_sum

beta_hat = 0.5
limit = 1 / (1 - beta_hat**2)

# E[W_N^2] along a geometric ladder; the gap closes like 1 / log N
print(f"{'N':>7} {'R_N':>8} {'Lambda_N':>10} {'E[W^2]':>9} {'gap':>8}")
for p in range(4, 16, 2):
    N = 2**p
    lam = collision_weight(beta_hat, N)
    m2 = exact_second_moment(0, N, lam)
    print(f"{N:7d} {overlap_sum(N).value:8.4f} {lam:10.6f} {m2:9.5f} {m2 - limit:+8.5f}")

# one moment table: Var(U_k) per dyadic window next to its Riemann limit
mt = moment_table(2**15, 8, beta_hat)
print()
print(f"{'k':>2} {'window':>15} {'Var U_k':>9} {'limit':>9}")
for row in mt.rows():
    window = f"({row['t_prev']}, {row['t_k']}]"
    print(f"{row['k']:2d} {window:>15} {row['var_u']:9.5f} {row['limit'] - 1:9.5f}")
print(f"sum Var U_k = {mt.lambda_MN:.5f}   vs  lambda^2 = {lambda_limit(beta_hat):.5f}")
print(f"e^lambda^2 = {math.exp(lambda_limit(beta_hat)):.5f}")
