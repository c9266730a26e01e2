#pragma once

#include "qls/ansatz.hpp"
#include "qls/circuit.hpp"
#include "qls/cost.hpp"
#include "qls/cqs.hpp"
#include "qls/error.hpp"
#include "qls/evolutionary.hpp"
#include "qls/experiment.hpp"
#include "qls/gate.hpp"
#include "qls/hadamard_test.hpp"
#include "qls/noise.hpp"
#include "qls/optimizers.hpp"
#include "qls/oracle.hpp"
#include "qls/parallel.hpp"
#include "qls/problem.hpp"
#include "qls/random.hpp"
#include "qls/state_vector.hpp"
#include "qls/vqls.hpp"
