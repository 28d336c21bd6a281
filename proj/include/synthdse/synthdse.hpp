#ifndef SYNTHDSE_SYNTHDSE_HPP
#define SYNTHDSE_SYNTHDSE_HPP

#include "synthdse/domain.hpp"
#include "synthdse/error.hpp"
#include "synthdse/estimator.hpp"
#include "synthdse/homogeneity.hpp"
#include "synthdse/metrics.hpp"
#include "synthdse/rng.hpp"
#include "synthdse/simulator.hpp"
#include "synthdse/small_instance_oracle.hpp"
#include "synthdse/variance_lab.hpp"

#endif
