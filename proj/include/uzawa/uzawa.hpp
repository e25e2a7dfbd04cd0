#pragma once

/// Umbrella header for the whole library.

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/dense.hpp"
#include "uzawa/linalg/io.hpp"
#include "uzawa/linalg/sparse_factor.hpp"
#include "uzawa/linalg/vector.hpp"
#include "uzawa/operators/apply_operator.hpp"
#include "uzawa/operators/preconditioners.hpp"
#include "uzawa/operators/schur.hpp"
#include "uzawa/diagnostics/spectral.hpp"
#include "uzawa/solvers/config.hpp"
#include "uzawa/solvers/gmres.hpp"
#include "uzawa/solvers/saddle_system.hpp"
#include "uzawa/solvers/trace.hpp"
#include "uzawa/solvers/uzawa.hpp"
#include "uzawa/problems/fields.hpp"
#include "uzawa/problems/oseen.hpp"
#include "uzawa/problems/picard.hpp"
#include "uzawa/problems/synthetic.hpp"
