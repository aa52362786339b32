#ifndef DKQL_DKQL_HPP
#define DKQL_DKQL_HPP

#include "dkql/complexity.hpp"
#include "dkql/config.hpp"
#include "dkql/distributed.hpp"
#include "dkql/evaluation.hpp"
#include "dkql/experiment.hpp"
#include "dkql/features.hpp"
#include "dkql/io.hpp"
#include "dkql/kernel.hpp"
#include "dkql/learners.hpp"
#include "dkql/linear.hpp"
#include "dkql/policy.hpp"
#include "dkql/reproduce.hpp"
#include "dkql/rng.hpp"
#include "dkql/sim1.hpp"
#include "dkql/sim2.hpp"
#include "dkql/simulate.hpp"
#include "dkql/trajectory.hpp"

#endif  // DKQL_DKQL_HPP
