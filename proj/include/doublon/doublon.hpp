#pragma once

#include "doublon/config.hpp"
#include "doublon/effective.hpp"
#include "doublon/eigensolver.hpp"
#include "doublon/errors.hpp"
#include "doublon/experiment.hpp"
#include "doublon/fock_basis.hpp"
#include "doublon/hamiltonian.hpp"
#include "doublon/json_out.hpp"
#include "doublon/lattice.hpp"
#include "doublon/matching.hpp"
#include "doublon/model.hpp"
#include "doublon/observables.hpp"
#include "doublon/pipeline.hpp"
#include "doublon/rng.hpp"
#include "doublon/sparse.hpp"
#include "doublon/topology.hpp"
