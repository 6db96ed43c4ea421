#ifndef HMC_HMC_HPP
#define HMC_HMC_HPP

#include "hmc/analysis.hpp"
#include "hmc/commands.hpp"
#include "hmc/config.hpp"
#include "hmc/experiments.hpp"
#include "hmc/integrators.hpp"
#include "hmc/model.hpp"
#include "hmc/samplers.hpp"
#include "hmc/targets.hpp"

#endif  // HMC_HMC_HPP
