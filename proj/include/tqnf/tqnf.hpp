#pragma once

// Numerical engine for quantum and classical normal forms of the operator
// family -i hbar omega.grad + eps V on the torus: exact Fourier-atom symbol
// calculus, Weyl quantization with a matrix oracle, homological solves with
// small-denominator divisors, order-by-order normal forms, the
// superconvergent iteration with its constants ledger, and spectral
// verification against brute-force diagonalization.

#include "tqnf/classical.hpp"
#include "tqnf/context.hpp"
#include "tqnf/errors.hpp"
#include "tqnf/estimates.hpp"
#include "tqnf/homological.hpp"
#include "tqnf/io.hpp"
#include "tqnf/kam.hpp"
#include "tqnf/moyal.hpp"
#include "tqnf/qnf.hpp"
#include "tqnf/spectrum.hpp"
#include "tqnf/symbol.hpp"
#include "tqnf/weyl.hpp"
